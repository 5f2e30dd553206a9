#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gibbslab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : Error {
  using Error::Error;
};

// enumeration or search ran out of its node allowance
struct BudgetExceeded : Error {
  using Error::Error;
};

struct Budget {
  std::uint64_t limit = 200'000'000;
  std::uint64_t used = 0;

  void tick(std::uint64_t n = 1) {
    used += n;
    if (used > limit) throw BudgetExceeded("search budget of " + std::to_string(limit) + " nodes exhausted");
  }
};

}  // namespace gibbslab
