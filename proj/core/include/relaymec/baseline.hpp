#pragma once

#include "relaymec/recovery.hpp"
#include "relaymec/types.hpp"

namespace relaymec {

// Comparison scheme with the server CPU split evenly across nodes
// (f_mec,k = f_mec_max / M). The frame-sharing constraint then binds per
// node, so the scalar frame price generalizes to one multiplier per node;
// the report's dual.zeta carries their sum. Same errors and gap policy as
// solve_instance; the report is tagged method = "equal".
SolveReport solve_equal_allocation(const Instance& in,
                                   const SolveSettings& settings = {});

}  // namespace relaymec
