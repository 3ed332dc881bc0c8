#pragma once

#include "gnest/diagnostics.hpp"
#include "gnest/equilibrium.hpp"
#include "gnest/error.hpp"
#include "gnest/estimator.hpp"
#include "gnest/format.hpp"
#include "gnest/game.hpp"
#include "gnest/graphon.hpp"
#include "gnest/linalg.hpp"
#include "gnest/piecewise.hpp"
#include "gnest/sampling.hpp"
