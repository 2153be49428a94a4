#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace grf {

struct CheckResult {
    std::string suite;
    std::string name;
    double value = 0;
    double threshold = 0;
    bool pass = false;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 1;
    int mesh = 64;            // finest resolution; curvature also runs at mesh/2
    double amplitude = 0.02;  // size of the random perturbations
    int directions = 20;      // variation suite
    int samples = 1000;       // algebra suite
};

// Suites: curvature, torsion, algebra, variation. "all" runs every suite.
std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& opt);
const std::vector<std::string>& suite_names();

std::string format_table(const std::vector<CheckResult>& rows);
bool all_pass(const std::vector<CheckResult>& rows);

}  // namespace grf
