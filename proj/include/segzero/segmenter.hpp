#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

#include "segzero/geometry.hpp"
#include "segzero/parser.hpp"
#include "segzero/synth.hpp"

namespace segzero::segmenter {

/// Failures of a segmentation backend.
struct BackendError : Error {
  using Error::Error;
};

/// Endpoint unreachable, or no complete response within the configured timeout.
struct Timeout : BackendError {
  using BackendError::BackendError;
};

/// Non-200 status, malformed response body, or a mask of the wrong size.
struct ProtocolError : BackendError {
  ProtocolError(const std::string& what, int status = 0)
      : BackendError(what), status(status) {}
  int status;
};

/// The response mask RLE does not decode.
struct DecodeError : BackendError {
  using BackendError::BackendError;
};

struct ConfigError : Error {
  using Error::Error;
};

enum class BackendKind { Synthetic, Remote };

std::string_view to_string(BackendKind k);
std::optional<BackendKind> parse_backend_kind(std::string_view s);

inline constexpr std::string_view kDefaultPath = "/segment";

struct SegBackend {
  BackendKind kind = BackendKind::Synthetic;
  /// http://host[:port][/path]; the path defaults to kDefaultPath.
  std::optional<std::string> endpoint;
  std::chrono::milliseconds timeout{10000};

  /// Throws ConfigError when a remote backend has no usable endpoint.
  void validate() const;
};

/// Selects the object maximizing IoU(visible box, prompt box) + 0.5 * (prompt points on its
/// visible mask) / 2 and returns its visible mask. Ties go to the lowest index; an empty mask
/// comes back when every object scores 0.
geometry::BinaryMask segment_synthetic(const synth::Scene& scene, const parser::SegPrompt& prompt);

/// One POST of the wire-protocol request. The image size is read from the PNG header.
geometry::BinaryMask segment_remote(std::string_view png_bytes, const parser::SegPrompt& prompt,
                                    const SegBackend& backend);

}  // namespace segzero::segmenter
