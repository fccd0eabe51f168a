#pragma once

#include <stdexcept>
#include <string>

namespace codwoe {

// Single exception type for all recoverable library errors. Messages carry
// the offending item index / key name wherever the input format defines one.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace codwoe
