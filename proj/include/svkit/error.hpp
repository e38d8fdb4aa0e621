// Copyright 2026  The svkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace svkit {

enum class Errc {
  kInvalidArgument,
  kIo,
  kZeroVector,
  kBadMagic,
  kDimMismatch,
  kDuplicateId,
  kTruncatedFile,
  kMissingLabel,
  kUnknownId,
  kDegenerateCohort,
  kMisalignedTrials,
  kInsufficientData,
  kMissingMeta,
  kTopNTooLarge,
  kArityMismatch,
  kOneClassOnly,
  kIdMismatch,
  kKTooLarge,
  kEmptyInput,
  kIdSetChanged,
  kNonUnitInput,
  kEmptyQueue,
  kLengthMismatch,
  kCropTooLong,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kIo: return "Io";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kDimMismatch: return "DimMismatch";
    case Errc::kDuplicateId: return "DuplicateId";
    case Errc::kTruncatedFile: return "TruncatedFile";
    case Errc::kMissingLabel: return "MissingLabel";
    case Errc::kUnknownId: return "UnknownId";
    case Errc::kDegenerateCohort: return "DegenerateCohort";
    case Errc::kMisalignedTrials: return "MisalignedTrials";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kMissingMeta: return "MissingMeta";
    case Errc::kTopNTooLarge: return "TopNTooLarge";
    case Errc::kArityMismatch: return "ArityMismatch";
    case Errc::kOneClassOnly: return "OneClassOnly";
    case Errc::kIdMismatch: return "IdMismatch";
    case Errc::kKTooLarge: return "KTooLarge";
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kIdSetChanged: return "IdSetChanged";
    case Errc::kNonUnitInput: return "NonUnitInput";
    case Errc::kEmptyQueue: return "EmptyQueue";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kCropTooLong: return "CropTooLong";
  }
  return "Unknown";
}

/// Every failure raised by svkit carries one of the Errc codes so callers
/// (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace svkit
