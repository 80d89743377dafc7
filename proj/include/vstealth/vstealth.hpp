#pragma once

// Umbrella header.
#include "vstealth/core.hpp"
#include "vstealth/stm.hpp"
#include "vstealth/lvie.hpp"
#include "vstealth/attack.hpp"
#include "vstealth/closedloop.hpp"
#include "vstealth/conditions.hpp"
#include "vstealth/io.hpp"
#include "vstealth/sweep.hpp"
