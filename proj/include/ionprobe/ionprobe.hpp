#pragma once

#include "ionprobe/charging.hpp"
#include "ionprobe/cli.hpp"
#include "ionprobe/config.hpp"
#include "ionprobe/crystal.hpp"
#include "ionprobe/csv.hpp"
#include "ionprobe/electrostatics.hpp"
#include "ionprobe/errors.hpp"
#include "ionprobe/estimation.hpp"
#include "ionprobe/forward.hpp"
#include "ionprobe/least_squares.hpp"
#include "ionprobe/presets.hpp"
#include "ionprobe/units.hpp"
