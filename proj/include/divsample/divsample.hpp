#pragma once

// Umbrella header.

#include "divsample/dpp_sampler.hpp"
#include "divsample/error.hpp"
#include "divsample/feature_store.hpp"
#include "divsample/kernels.hpp"
#include "divsample/kmeanspp_sampler.hpp"
#include "divsample/metrics.hpp"
#include "divsample/numeric.hpp"
#include "divsample/random.hpp"
#include "divsample/sampler_engine.hpp"
#include "divsample/subset.hpp"
#include "divsample/synth.hpp"
