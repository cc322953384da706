#pragma once
// Umbrella header.
#include "errors.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "action_fields.hpp"
#include "singularity_atlas.hpp"
#include "kernel_oracles.hpp"
#include "advection.hpp"
#include "signal_analysis.hpp"
#include "io.hpp"
#include "config.hpp"
#include "reproduce.hpp"
