#pragma once

#include "levyou/core.hpp"
#include "levyou/girsanov.hpp"
#include "levyou/jump_calculus.hpp"
#include "levyou/levy.hpp"
#include "levyou/ou_solver.hpp"
#include "levyou/path_io.hpp"
#include "levyou/paths.hpp"
#include "levyou/rigidity.hpp"
#include "levyou/rng.hpp"
