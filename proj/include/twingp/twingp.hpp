#pragma once

// Umbrella header for the twingp library.

#include <twingp/config.hpp>
#include <twingp/dynamics.hpp>
#include <twingp/errors.hpp>
#include <twingp/format.hpp>
#include <twingp/gp.hpp>
#include <twingp/inversion.hpp>
#include <twingp/io.hpp>
#include <twingp/kernels.hpp>
#include <twingp/lbfgs.hpp>
#include <twingp/mean.hpp>
#include <twingp/parallel.hpp>
#include <twingp/pipeline.hpp>
#include <twingp/rng.hpp>
#include <twingp/selection.hpp>
