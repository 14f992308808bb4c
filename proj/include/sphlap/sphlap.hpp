#pragma once

/// Umbrella header for the spherical Laplace library.

#include "sphlap/density.hpp"
#include "sphlap/experiments.hpp"
#include "sphlap/io.hpp"
#include "sphlap/metrics.hpp"
#include "sphlap/mixture.hpp"
#include "sphlap/mle.hpp"
#include "sphlap/quadrature.hpp"
#include "sphlap/sampler.hpp"
#include "sphlap/sphere.hpp"
#include "sphlap/table.hpp"
