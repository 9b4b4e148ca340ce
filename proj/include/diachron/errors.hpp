#pragma once

#include <stdexcept>
#include <string>

namespace diachron {

// Base for all typed errors. `kind()` is a stable machine-readable tag;
// `category()` maps onto the CLI exit-code classes (config/data/numeric).
class Error : public std::runtime_error {
public:
    enum class Category { Config, Data, Numeric };

    Error(std::string kind, std::string message, Category cat = Category::Data)
        : std::runtime_error(std::move(message)), kind_(std::move(kind)), cat_(cat) {}

    const std::string& kind() const { return kind_; }
    Category category() const { return cat_; }

private:
    std::string kind_;
    Category cat_;
};

struct ConfigError : Error {
    ConfigError(std::string path, std::string reason)
        : Error("ConfigError", path + ": " + reason, Category::Config) {}
};

struct DataError : Error {
    DataError(std::string kind, std::string msg) : Error(std::move(kind), std::move(msg)) {}
};

struct NumericError : Error {
    NumericError(std::string kind, std::string msg)
        : Error(std::move(kind), std::move(msg), Category::Numeric) {}
};

} // namespace diachron
