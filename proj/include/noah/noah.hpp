#pragma once

#include "noah/audience.hpp"
#include "noah/bandit.hpp"
#include "noah/common.hpp"
#include "noah/core.hpp"
#include "noah/duallip.hpp"
#include "noah/harness.hpp"
#include "noah/losses.hpp"
#include "noah/pid.hpp"
#include "noah/projection.hpp"
#include "noah/rounding.hpp"
#include "noah/selector.hpp"
#include "noah/stats.hpp"
