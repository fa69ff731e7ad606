#pragma once

#include <stdexcept>
#include <string>

namespace motiondiff {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MOTIONDIFF_ERROR(Name)                  \
    class Name : public Error {                 \
    public:                                     \
        using Error::Error;                     \
    }

MOTIONDIFF_ERROR(ParseError);
MOTIONDIFF_ERROR(ValidationError);
MOTIONDIFF_ERROR(ConfigError);
MOTIONDIFF_ERROR(DimensionError);
MOTIONDIFF_ERROR(OrderingError);
MOTIONDIFF_ERROR(RoutingError);
MOTIONDIFF_ERROR(InputError);
MOTIONDIFF_ERROR(DataError);
MOTIONDIFF_ERROR(NumericalError);
MOTIONDIFF_ERROR(ContractError);
MOTIONDIFF_ERROR(ClientError);
MOTIONDIFF_ERROR(IoError);

#undef MOTIONDIFF_ERROR

}  // namespace motiondiff
