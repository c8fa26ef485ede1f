#pragma once

#include <stdexcept>
#include <string>

namespace pfc {

// Error hierarchy. Every failure mode of the library maps to one of these;
// the CLI translates categories into stable exit codes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define PFC_DEFINE_ERROR(Name)                                   \
  struct Name : Error {                                          \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  }

PFC_DEFINE_ERROR(TriangularityViolation);
PFC_DEFINE_ERROR(DegreeMismatch);
PFC_DEFINE_ERROR(DomainViolation);
PFC_DEFINE_ERROR(PrecisionUnreachable);
PFC_DEFINE_ERROR(ImageEscapesDomain);
PFC_DEFINE_ERROR(ZeroInImage);
PFC_DEFINE_ERROR(CertificationUnavailable);
PFC_DEFINE_ERROR(DerivativeVanishes);
PFC_DEFINE_ERROR(ClosureEscapes);
PFC_DEFINE_ERROR(UnboundedAuxiliary);
PFC_DEFINE_ERROR(IsolationFailure);
PFC_DEFINE_ERROR(IdenticallyZero);
PFC_DEFINE_ERROR(LimitDivergence);
PFC_DEFINE_ERROR(NonMonotoneBoundary);
PFC_DEFINE_ERROR(BudgetExceeded);
PFC_DEFINE_ERROR(UnsupportedDimensions);
PFC_DEFINE_ERROR(UndecidableMembership);
PFC_DEFINE_ERROR(CertificateMissing);
PFC_DEFINE_ERROR(MeshOverflow);
PFC_DEFINE_ERROR(ParseError);

#undef PFC_DEFINE_ERROR

}  // namespace pfc
