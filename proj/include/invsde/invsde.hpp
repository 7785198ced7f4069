#pragma once

// Umbrella header: build invariant stochastic differential systems from a
// first integral, simulate them, and verify invariance numerically.

#include "invsde/autodiff.hpp"
#include "invsde/catalog.hpp"
#include "invsde/dual.hpp"
#include "invsde/errors.hpp"
#include "invsde/expr.hpp"
#include "invsde/field.hpp"
#include "invsde/geometry.hpp"
#include "invsde/harness.hpp"
#include "invsde/linalg.hpp"
#include "invsde/rng.hpp"
#include "invsde/simulate.hpp"
#include "invsde/symbolic.hpp"
#include "invsde/synthesis.hpp"
#include "invsde/sysdef.hpp"
