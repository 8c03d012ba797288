#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "autolabel/error.hpp"
#include "autolabel/track.hpp"

namespace autolabel {

// Append the states of `from_id` to `into_id`; `from_id` disappears.
struct MergeOp {
  int from_id = 0;
  int into_id = 0;
};

// Move states with frame >= at_frame to a new tracklet.
struct SplitOp {
  int id = 0;
  int at_frame = 0;
  std::optional<int> new_id;  // allocated from next_id when unset
};

struct DeleteOp {
  int id = 0;
};

// Move states with frame in [from_frame, to_frame] to `new_id`. An existing
// `new_id` receives the states (frames must not collide); an unset one is
// allocated from next_id.
struct ReassignOp {
  int id = 0;
  int from_frame = 0;
  int to_frame = 0;
  std::optional<int> new_id;
};

using EditAction = std::variant<MergeOp, SplitOp, DeleteOp, ReassignOp>;

struct EditOp {
  EditAction action;
  std::string author;
  std::int64_t timestamp_ms = 0;
};

const char* EditKind(const EditOp& op);

std::string Sha256Hex(std::string_view data);

// Hex SHA-256 over a canonical serialization of tracklet ids and states.
std::string Digest(const TrackSet& set);

// Throws UnknownId, FrameConflict or InvalidRange; `set` is never modified.
TrackSet ApplyEdit(const TrackSet& set, const EditOp& op);

struct EditLog {
  // Digest of the set the ops were recorded against; unchecked when empty.
  std::string base_digest;
  std::vector<EditOp> ops;
};

// Failure of op `index` during replay; the base set is left untouched.
class ReplayError : public Error {
 public:
  ReplayError(ErrorCode code, std::size_t index, const std::string& message)
      : Error(code, "op " + std::to_string(index) + ": " + message), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Applies every op in order. Throws DigestMismatch, or ReplayError carrying the
// code of the failing op.
TrackSet ReplayEditLog(const TrackSet& base, const EditLog& log);

struct CorruptionOptions {
  int swaps = 2;
  int false_tracklets = 2;
  int false_length = 30;
  // False tracklets are placed at least this far from every other tracklet.
  double clearance_mm = 2500.0;
};

struct Corruption {
  TrackSet corrupted;
  EditLog fix;  // restores the original states when replayed on `corrupted`
};

// Injects identity swaps between tracklets and adds false tracklets, and
// records the edit log that undoes both.
Corruption CorruptTrackSet(const TrackSet& clean, std::uint64_t seed, const CorruptionOptions& options = {});

}  // namespace autolabel
