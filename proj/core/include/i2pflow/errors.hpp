#pragma once

#include <stdexcept>
#include <string>

namespace i2pflow {

// Error families map 1:1 onto CLI exit codes (see tools/).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct TrainError : std::runtime_error {
  explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

// Model-container problems (bad magic, version, checksum) are an I/O concern.
struct ModelFormatError : IoError {
  explicit ModelFormatError(const std::string& what) : IoError(what) {}
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitSchema = 4;
inline constexpr int kExitTrain = 5;

}  // namespace i2pflow
