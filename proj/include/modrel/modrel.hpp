#pragma once

#include "modrel/choice.hpp"
#include "modrel/demand.hpp"
#include "modrel/dist.hpp"
#include "modrel/estimate.hpp"
#include "modrel/network.hpp"
#include "modrel/optimize.hpp"
#include "modrel/sim.hpp"
