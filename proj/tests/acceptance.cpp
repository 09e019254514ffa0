#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "foliate/acceptance.hpp"

// Usage: acceptance [--only <id|key|tag>]... [--seed <n>] [--serial]
int main(int argc, char** argv) {
  foliate::AcceptanceOptions opt;
  std::vector<std::string> only;
  bool parallel = true;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only.push_back(argv[++i]);
    } else if (a == "--seed" && i + 1 < argc) {
      opt.seed = std::strtoull(argv[++i], nullptr, 10);
    } else if (a == "--serial") {
      parallel = false;
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", a.c_str());
      return 2;
    }
  }
  std::vector<foliate::CriterionResult> results;
  try {
    results = foliate::run_acceptance(opt, only, parallel);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s %2d %-15s %6.2fs  %s\n", r.pass ? "PASS" : "FAIL", r.id, r.key.c_str(), r.seconds,
                r.summary.c_str());
    if (!r.pass) ++failed;
  }
  std::printf("seed %llu: %zu criteria, %d failed\n", static_cast<unsigned long long>(opt.seed), results.size(),
              failed);
  return failed == 0 ? 0 : 1;
}
