// flowline.hpp — umbrella header.
#pragma once

#include "flowline/bracket_field.hpp"
#include "flowline/cli_commands.hpp"
#include "flowline/diagnostics.hpp"
#include "flowline/errors.hpp"
#include "flowline/field_ops.hpp"
#include "flowline/linear_solver.hpp"
#include "flowline/norms.hpp"
#include "flowline/problem_io.hpp"
#include "flowline/sgrid.hpp"
#include "flowline/solver.hpp"
#include "flowline/theta_series.hpp"
