#pragma once

#include "esvland/action.hpp"
#include "esvland/config.hpp"
#include "esvland/dataset.hpp"
#include "esvland/environment.hpp"
#include "esvland/esv.hpp"
#include "esvland/eval.hpp"
#include "esvland/grid.hpp"
#include "esvland/planners.hpp"
#include "esvland/reward.hpp"
