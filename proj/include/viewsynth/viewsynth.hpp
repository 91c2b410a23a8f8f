#pragma once

// Umbrella header for the whole library.

#include "viewsynth/geometry.hpp"
#include "viewsynth/gradcheck.hpp"
#include "viewsynth/image.hpp"
#include "viewsynth/io.hpp"
#include "viewsynth/losses.hpp"
#include "viewsynth/metrics.hpp"
#include "viewsynth/objective.hpp"
#include "viewsynth/optimizer.hpp"
#include "viewsynth/params.hpp"
#include "viewsynth/sampler.hpp"
#include "viewsynth/synthscene.hpp"
