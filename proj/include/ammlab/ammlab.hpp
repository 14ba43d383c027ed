#pragma once

#include "ammlab/common.hpp"
#include "ammlab/data.hpp"
#include "ammlab/design.hpp"
#include "ammlab/dp.hpp"
#include "ammlab/dynamics.hpp"
#include "ammlab/growth.hpp"
#include "ammlab/io.hpp"
#include "ammlab/market.hpp"
#include "ammlab/optimize.hpp"
#include "ammlab/pricing.hpp"
#include "ammlab/stationary.hpp"
