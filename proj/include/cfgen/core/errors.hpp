#pragma once

#include <stdexcept>
#include <string>

namespace cfgen {

// Base of every error the library raises. The category drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  enum class Category {
    kConfig,      // invalid configuration or arguments
    kDataset,     // unreadable or invalid input data
    kTransport,   // endpoint unreachable after retries (retryable)
    kProtocol,    // endpoint answered with something that violates the wire contract
    kCapability,  // endpoint lacks a required feature
    kGeneration,  // generator produced nothing usable
    kMetric,      // metric undefined for an input
    kCacheMiss,   // offline mode and no cached response
    kInternal,
  };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::kConfig, what) {}
};

class DatasetError : public Error {
 public:
  explicit DatasetError(const std::string& what) : Error(Category::kDataset, what) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error(Category::kTransport, what) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(Category::kProtocol, what) {}
};

class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& what) : Error(Category::kCapability, what) {}
};

class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& what) : Error(Category::kGeneration, what) {}
};

class MetricError : public Error {
 public:
  explicit MetricError(const std::string& what) : Error(Category::kMetric, what) {}
};

class CacheMissError : public Error {
 public:
  explicit CacheMissError(const std::string& what) : Error(Category::kCacheMiss, what) {}
};

}  // namespace cfgen
