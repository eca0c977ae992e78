#pragma once

#include <stdexcept>
#include <string>

namespace restrictlab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define RESTRICTLAB_ERROR(Name)              \
    class Name : public Error {              \
    public:                                  \
        using Error::Error;                  \
    }

RESTRICTLAB_ERROR(DomainError);
RESTRICTLAB_ERROR(OrderError);
RESTRICTLAB_ERROR(ParseError);
RESTRICTLAB_ERROR(IntegrationError);
RESTRICTLAB_ERROR(JetInconsistencyError);
RESTRICTLAB_ERROR(SeedError);
RESTRICTLAB_ERROR(BranchError);
RESTRICTLAB_ERROR(AdmissibilityError);
RESTRICTLAB_ERROR(LeadingVectorError);
RESTRICTLAB_ERROR(EmptyClusterError);
RESTRICTLAB_ERROR(QuadratureError);
RESTRICTLAB_ERROR(CapError);
RESTRICTLAB_ERROR(FitError);
RESTRICTLAB_ERROR(ConfigError);

#undef RESTRICTLAB_ERROR

}  // namespace restrictlab
