#include "cfx/demo.hpp"

namespace cfx {

DemoSystem make_demo(int which) {
    std::vector<Monomial> terms;
    switch (which) {
        case 1:
            // x1 + x2 + 10*x1*x3 + 10*x2*x3
            terms = {{1.0, {0}}, {1.0, {1}}, {10.0, {0, 2}}, {10.0, {1, 2}}};
            break;
        case 2:
            // x1*x2
            terms = {{1.0, {0, 1}}};
            break;
        case 3:
            // x1 + x2 - 2*x1*x2 - x1*x3 - x2*x3 + 3*x1*x2*x3
            terms = {{1.0, {0}},       {1.0, {1}},       {-2.0, {0, 1}},
                     {-1.0, {0, 2}},   {-1.0, {1, 2}},   {3.0, {0, 1, 2}}};
            break;
        default:
            throw Error("demo system must be 1, 2, or 3");
    }
    auto schema = binary_schema(3);
    DecisionSystem system{ScoringFunction::polynomial(std::move(terms), 3),
                          DecisionRule{RuleKind::ThresholdAtLeast, 1.0, 1, 0}, 2};
    return DemoSystem{schema, std::move(system), Instance(schema, {1.0, 1.0, 1.0}),
                      CounterfactualPolicy::zero(schema)};
}

}  // namespace cfx
