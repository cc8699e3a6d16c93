#pragma once

#include <stdexcept>
#include <string>

namespace dcl {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// line_through_points: the two input points are closer than the geometric
// tolerance, so no unique line exists.
struct CoincidentPointsError : Error {
  using Error::Error;
};

// line_intersection: |sin| of the angle between the lines is below tolerance.
// For DCL this is not an incidental failure; near-parallel pairs are the
// inter-anchor instability regime.
struct NearParallelError : Error {
  using Error::Error;
};

// Keypoint outside the image rectangle.
struct OutOfBoundsError : Error {
  using Error::Error;
};

// Nonpositive image dimensions or anchor separation.
struct InvalidDimensionsError : Error {
  using Error::Error;
};

// Neighborhood construction asked for more neighbors than points available.
struct TooFewPointsError : Error {
  using Error::Error;
};

// Parallel input vectors have mismatched lengths.
struct LengthMismatchError : Error {
  using Error::Error;
};

// Point recovery called with no neighbors of any kind.
struct EmptyNeighborhoodError : Error {
  using Error::Error;
};

// Minimal solver sample with a non-invertible stacked-normal matrix.
struct DegenerateSampleError : Error {
  using Error::Error;
};

// Non-minimal linear system does not span the required rank.
struct RankDeficientError : Error {
  using Error::Error;
};

// Every keypoint of a query maps to a single anchor, so no mixed-anchor
// minimal sample exists.
struct DegenerateQueryError : Error {
  using Error::Error;
};

}  // namespace dcl
