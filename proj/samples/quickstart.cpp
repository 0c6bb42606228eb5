// Minimal end-to-end use of the library: optimize a synthetic function for
// execution time, then ask the fitted model for a cheaper configuration that
// stays within 20% of the best-found time.

#include <iostream>

#include "faastune/faastune.hpp"

int main() {
    using namespace faastune;

    const SearchSpace space = SearchSpace::default_space();
    const SyntheticFunctionSpec fn = default_synthetic_suite()[2]; // video_pack
    const Evaluator evaluate = make_synthetic_evaluator(fn, "default");

    const TrialObjective objective(ObjectiveSpec::time());
    const OptimizationTrace trace =
        run_bo(evaluate, space, objective, SurrogateKind::gp, {.budget = 20, .n_init = 3}, 1);

    if (!trace.best_value()) {
        std::cout << "no valid configuration found\n";
        return 1;
    }
    const ResourceConfig best = *trace.best_config();
    std::cout << fn.name << ": best time " << *trace.best_value() << " ms at " << best.family
              << " cpu=" << best.cpu_share << " mem=" << best.memory_mb << " MB\n";

    const PricingTable pricing = solve_pricing({
        {"c6g", 2, 4.0, 0.068, "cpu_c6g", "mem_arm", {}},
        {"m6g", 2, 8.0, 0.077, "cpu_m6g", "mem_arm", {}},
        {"r6g", 2, 16.0, 0.1008, "cpu_m6g", "mem_arm", {}},
        {"c5", 2, 4.0, 0.085, "cpu_c5", "mem_x86", {}},
        {"m5", 2, 8.0, 0.096, "cpu_m5", "mem_x86", {}},
        {"r5", 2, 16.0, 0.126, "cpu_m5", "mem_x86", {}},
        {"c5a", 2, 4.0, 0.077, "cpu_c5a", "mem_amd", {}},
        {"m5a", 2, 8.0, 0.086, "cpu_m5a", "mem_amd", {}},
        {"r5a", 2, 16.0, 0.113, "cpu_m5a", "mem_amd", {}},
    });

    const auto model = model_from_trace(trace);
    const ConfigPredictor predicted_time = predictor_from_model(*model, trace.final_space);
    const ConfigPredictor predicted_cost = [&](const ResourceConfig& c) {
        return execution_cost(c, predicted_time(c), pricing);
    };
    const HierarchicalResult cheaper = hierarchical_optimize(
        predicted_time, predicted_cost, trace.final_space, 0.20, *trace.best_value(), best);

    std::cout << "within +20% time: " << cheaper.config.family
              << " cpu=" << cheaper.config.cpu_share << " mem=" << cheaper.config.memory_mb
              << " MB, predicted " << cheaper.predicted_primary << " ms / "
              << cheaper.predicted_secondary << " per run\n";
    return 0;
}
