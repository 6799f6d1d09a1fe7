#pragma once

#include "analysis.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "history.hpp"
#include "models.hpp"
#include "numeric.hpp"
#include "rng.hpp"
#include "solver.hpp"
#include "state.hpp"
#include "verification.hpp"
#include "verify_suites.hpp"
