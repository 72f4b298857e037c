#pragma once

#include <stdexcept>
#include <string>

namespace ebsvie {

/// Base class for every error raised by the library. The module tag is
/// prepended to the message so errors stay attributable after propagation.
class Error : public std::runtime_error {
public:
    Error(const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(module) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

#define EBSVIE_DEFINE_ERROR(Name)                                            \
    class Name : public Error {                                              \
    public:                                                                  \
        using Error::Error;                                                  \
    }

EBSVIE_DEFINE_ERROR(ArgumentError);
EBSVIE_DEFINE_ERROR(DomainError);
EBSVIE_DEFINE_ERROR(ValidationError);
EBSVIE_DEFINE_ERROR(LoadError);
EBSVIE_DEFINE_ERROR(SimulationError);
EBSVIE_DEFINE_ERROR(SingularityError);
EBSVIE_DEFINE_ERROR(SolverError);
EBSVIE_DEFINE_ERROR(DivergenceError);
EBSVIE_DEFINE_ERROR(NonContractionError);
EBSVIE_DEFINE_ERROR(NumericalError);
EBSVIE_DEFINE_ERROR(StabilityError);
EBSVIE_DEFINE_ERROR(InvariantError);

#undef EBSVIE_DEFINE_ERROR

}  // namespace ebsvie
