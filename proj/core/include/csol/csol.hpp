#pragma once

#include "csol/errors.hpp"
#include "csol/geom.hpp"
#include "csol/grid.hpp"
#include "csol/guillemin.hpp"
#include "csol/invariant.hpp"
#include "csol/ma_solver.hpp"
#include "csol/moments.hpp"
#include "csol/parallel.hpp"
#include "csol/soliton.hpp"
#include "csol/spectral.hpp"
