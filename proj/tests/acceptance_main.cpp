#include "cgolab_cli/acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

// Usage: cgolab_acceptance [criterion ...]
int main(int argc, char** argv)
{
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    auto results = cgolab::cli::run_acceptance(only, &std::cout);
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.pass;
    std::cout << passed << "/" << results.size() << " criteria passed\n";
    return passed == results.size() ? 0 : 1;
}
