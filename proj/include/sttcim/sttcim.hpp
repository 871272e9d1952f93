#pragma once

// Umbrella header.

#include "sttcim/common.hpp"
#include "sttcim/config.hpp"
#include "sttcim/layout.hpp"
#include "sttcim/device.hpp"
#include "sttcim/ecc.hpp"
#include "sttcim/energy.hpp"
#include "sttcim/array.hpp"
#include "sttcim/error_flow.hpp"
#include "sttcim/cpu.hpp"
#include "sttcim/mapper.hpp"
#include "sttcim/xform.hpp"
#include "sttcim/harness.hpp"
#include "sttcim/selftest.hpp"
