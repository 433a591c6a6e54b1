#pragma once

// Umbrella header for the uncertainty-gated graph library.

#include "ugg/ablation.hpp"
#include "ugg/autodiff.hpp"
#include "ugg/energy.hpp"
#include "ugg/errors.hpp"
#include "ugg/graph.hpp"
#include "ugg/inference.hpp"
#include "ugg/io.hpp"
#include "ugg/job.hpp"
#include "ugg/matrix.hpp"
#include "ugg/metrics.hpp"
#include "ugg/model.hpp"
#include "ugg/numeric.hpp"
#include "ugg/rng.hpp"
#include "ugg/synth.hpp"
