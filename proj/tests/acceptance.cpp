#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "factorlab/reproduce.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks, one pass/fail line per criterion"};
  int only = 0;
  bool verbose = false;
  app.add_option("--criterion", only, "Run a single criterion (1-12)")->check(CLI::Range(1, 12));
  app.add_flag("-v,--verbose", verbose, "Print every sub-check");
  CLI11_PARSE(app, argc, argv);

  const auto& all = factorlab::criteria();
  bool ok = true;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    const auto r = all[i].second();
    ok = ok && r.passed();
    std::cout << (r.passed() ? "PASS" : "FAIL") << "  criterion " << r.id << "  " << r.name << "  (" << r.seconds
              << " s)\n";
    for (const auto& c : r.checks)
      if (verbose || only || !c.passed)
        std::cout << "      " << (c.passed ? "ok  " : "FAIL") << "  " << c.name
                  << (c.detail.empty() ? "" : "  [" + c.detail + "]") << "\n";
  }
  return ok ? 0 : 1;
}
