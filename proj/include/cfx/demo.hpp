#pragma once

#include "cfx/decision.hpp"
#include "cfx/policy.hpp"
#include "cfx/schema.hpp"

namespace cfx {

// Built-in three-feature binary demo systems: a polynomial scorer, a
// threshold-at-1 rule, the all-ones instance, and the zero policy. Used by
// the CLI --demo flag and the reproduction harness.
struct DemoSystem {
    SchemaPtr schema;
    DecisionSystem system;
    Instance instance;
    CounterfactualPolicy policy;
};

// which = 1, 2, or 3
DemoSystem make_demo(int which);

}  // namespace cfx
