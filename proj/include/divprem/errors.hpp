#ifndef DIVPREM_ERRORS_HPP
#define DIVPREM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace divprem {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace divprem

#endif // DIVPREM_ERRORS_HPP
