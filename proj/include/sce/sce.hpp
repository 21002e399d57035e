#pragma once

#include "sce/diagnostics.hpp"
#include "sce/dynamics.hpp"
#include "sce/fields.hpp"
#include "sce/harness/config.hpp"
#include "sce/harness/experiment.hpp"
#include "sce/harness/io.hpp"
#include "sce/harness/selftest.hpp"
#include "sce/noise.hpp"
#include "sce/snapshot.hpp"
#include "sce/thermo.hpp"
