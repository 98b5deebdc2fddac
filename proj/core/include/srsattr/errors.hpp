#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace srsattr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed population file (bad row, non-binary attribute).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A population or design violates a structural invariant (N < 4, P in {0,1}, Ybar = 0, n >= N).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// A ratio-type estimator is undefined on the drawn sample (p = 0 or a vanishing denominator).
class DegenerateSample : public Error {
 public:
  using Error::Error;
};

/// Moments make the requested quantity undefined (C20 = 0).
class DegenerateMoments : public Error {
 public:
  using Error::Error;
};

class EnumerationTooLarge : public Error {
 public:
  EnumerationTooLarge(std::uint64_t subsets, std::uint64_t cap)
      : Error("enumeration of " + std::to_string(subsets) +
              " subsets exceeds cap " + std::to_string(cap)),
        subsets_(subsets) {}

  std::uint64_t subsets() const noexcept { return subsets_; }

 private:
  std::uint64_t subsets_;
};

/// Every Monte Carlo replicate was degenerate under the Skip policy.
class AllDegenerate : public Error {
 public:
  using Error::Error;
};

}  // namespace srsattr
