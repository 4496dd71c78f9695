#pragma once

#include "config.hpp"
#include "csv.hpp"
#include "cz_gate.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "faddeeva.hpp"
#include "integrator.hpp"
#include "jumps.hpp"
#include "levenberg_marquardt.hpp"
#include "parallel.hpp"
#include "photonstats.hpp"
#include "pulseshaper.hpp"
#include "rng.hpp"
#include "spectra.hpp"
#include "sweep.hpp"
#include "table_json.hpp"
#include "units.hpp"
