#pragma once

#include "tbpgame/error.hpp"
#include "tbpgame/geometry.hpp"
#include "tbpgame/assembly.hpp"
#include "tbpgame/linsolve.hpp"
#include "tbpgame/equilibrium.hpp"
#include "tbpgame/simulation.hpp"
#include "tbpgame/scenario.hpp"
#include "tbpgame/field_io.hpp"
#include "tbpgame/diagnostics.hpp"
#include "tbpgame/run.hpp"
