// verify_suites.hpp — Seeded property suites per module, runnable from the CLI.
#pragma once

#include <string>
#include <vector>

namespace hamtomo::cli {

struct CheckResult {
    std::string suite;
    std::string name;
    bool pass = false;
    std::string detail;
};

// suite: matrix | expcalc | propagator | gauge | xray | reconstruction | all.
// tolerance_scale multiplies every pass threshold (0 fails everything; used to
// test the harness itself).
std::vector<CheckResult> run_verify_suite(const std::string& suite, double tolerance_scale,
                                          int threads);

}  // namespace hamtomo::cli
