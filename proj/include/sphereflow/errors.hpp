#pragma once

#include <stdexcept>
#include <string>

namespace sphereflow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define SPHEREFLOW_ERROR(Name)                    \
    struct Name : Error {                         \
        using Error::Error;                       \
    }

SPHEREFLOW_ERROR(PoleHemisphereError);
SPHEREFLOW_ERROR(NonSymmetricError);
SPHEREFLOW_ERROR(DimensionError);
SPHEREFLOW_ERROR(RangeError);
SPHEREFLOW_ERROR(SupportOverlapError);
SPHEREFLOW_ERROR(BetaZeroError);
SPHEREFLOW_ERROR(MissingAntiderivativeError);
SPHEREFLOW_ERROR(NonTangentError);
SPHEREFLOW_ERROR(NotCriticalError);
SPHEREFLOW_ERROR(HypothesisError);
SPHEREFLOW_ERROR(SupportError);
SPHEREFLOW_ERROR(StepSizeError);
SPHEREFLOW_ERROR(CflError);
SPHEREFLOW_ERROR(InsufficientDataError);
SPHEREFLOW_ERROR(ConfigError);

#undef SPHEREFLOW_ERROR

}  // namespace sphereflow
