#pragma once

// Umbrella header for the dyadic harmonic-analysis toolkit.

#include "dyad/coefficients.hpp"
#include "dyad/czdecomp.hpp"
#include "dyad/czo.hpp"
#include "dyad/geometry.hpp"
#include "dyad/haar.hpp"
#include "dyad/io.hpp"
#include "dyad/linalg.hpp"
#include "dyad/maximal.hpp"
#include "dyad/measure.hpp"
#include "dyad/multiplier.hpp"
#include "dyad/quadrature.hpp"
#include "dyad/random.hpp"
#include "dyad/rational.hpp"
#include "dyad/rng.hpp"
#include "dyad/sparse.hpp"
#include "dyad/tree.hpp"
#include "dyad/weighted.hpp"
