// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace qcn {

/// Base class for all qcn errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid dimensions, out-of-range parameters, malformed inputs.
struct InvalidArgument : Error {
    using Error::Error;
};

/// The network routes essentially no current to the exit sites, so
/// normalized currents (and hence the cost) are undefined.
struct DegenerateNetworkError : Error {
    using Error::Error;
};

/// Numerical failure in the steady-state solve (residual above
/// tolerance, traceless null vector, invalid density matrix).
struct SolverError : Error {
    using Error::Error;
};

/// The Liouvillian has a null space of dimension > 1 at tolerance,
/// i.e. the steady state is not unique.
struct NonUniqueSteadyStateError : SolverError {
    using SolverError::SolverError;
};

/// Malformed data file (CSV/JSON). Messages carry row/field context.
struct DataError : Error {
    using Error::Error;
};

/// Invalid experiment configuration. Messages carry the field path.
struct ConfigError : Error {
    using Error::Error;
};

/// Training aborted; carries the offending parameter vector serialized
/// as JSON so the failure can be reproduced.
struct TrainingError : Error {
    TrainingError(const std::string& msg, std::string params_json)
        : Error(msg), offending_params_json(std::move(params_json)) {}
    std::string offending_params_json;
};

}  // namespace qcn
