#pragma once

#include "nctrl/types.hpp"
#include "nctrl/problem.hpp"
#include "nctrl/time_grid.hpp"
#include "nctrl/resolvent.hpp"
#include "nctrl/resolvent_cache.hpp"
#include "nctrl/trajectory.hpp"
#include "nctrl/mild_solver.hpp"
#include "nctrl/gramian.hpp"
#include "nctrl/hypotheses.hpp"
#include "nctrl/modal.hpp"
#include "nctrl/config.hpp"
#include "nctrl/csv.hpp"
