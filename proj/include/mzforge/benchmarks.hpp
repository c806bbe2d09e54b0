#pragma once

#include <string>

#include "mzforge/errors.hpp"
#include "mzforge/multi_index.hpp"

namespace mzforge {

// Frequency sets used by the bundled experiments. The two aliasing sets are
// deliberately spread out: their pairwise differences share large common
// divisors, which defeats small lattice rules while |I| stays tiny.
inline MultiIndexSet benchmark_index_set(const std::string& name) {
  if (name == "exp1-i1") return l1ball(2, 4);
  if (name == "exp1-i2") return hyperbolic(2, 6);
  if (name == "exp1-i3")
    return MultiIndexSet(2, {{0, 0},
                             {2671704, 2671704},
                             {-3111990, 3111990},
                             {-4145974, -4145974},
                             {4520742, -4520742},
                             {-5553600, -5553600},
                             {-6867835, 6867835},
                             {18119640, 18119640},
                             {39011940, -39011940},
                             {-39021892, 39021892}});
  if (name == "exp3-1d")
    return MultiIndexSet(1, {{0},
                             {107062},
                             {124928},
                             {1033760},
                             {1414818},
                             {2142995},
                             {2820145},
                             {4210229},
                             {4645143},
                             {5264579}});
  throw InvalidInput("benchmark_index_set: unknown name '" + name + "'");
}

}  // namespace mzforge
