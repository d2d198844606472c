#pragma once

#include <cstdint>
#include <string>

#include "ope/mdp.hpp"

namespace ope::io {

/// Shortest-exact decimal for a double is not required anywhere; the file
/// contracts ask for >= 15 significant digits, so everything is written with
/// 17 (%.17g), which round-trips exactly.
std::string format_double(double value);

/// Model files are line-oriented text: a magic+version line, scalar fields,
/// then dense row-major sections (initial_dist, mean_reward, transition).
/// The transition section has one line of n_states+1 probabilities per
/// (state, action), action fastest; the last column is the absorbing state.
std::string serialize_model(const TabularMdp& mdp);
void write_model(const TabularMdp& mdp, const std::string& path);
TabularMdp read_model(const std::string& path);

/// Policy files carry the dense row-major probability table.
std::string serialize_policy(const Policy& policy);
void write_policy(const Policy& policy, const std::string& path);
Policy read_policy(const std::string& path);

/// Content signatures (FNV-1a over the canonical serialization), rendered as
/// 16 hex digits in file headers.
std::uint64_t model_hash(const TabularMdp& mdp);
std::uint64_t policy_hash(const Policy& policy);
std::string hash_hex(std::uint64_t hash);

/// Episode files are JSON lines: one header object, then one object per
/// episode. Rewards carry 17 significant digits.
struct EpisodeFileHeader {
    int format_version = 1;
    std::int32_t n_states = 0;
    std::int32_t n_actions = 0;
    std::int32_t truncation = 0;
    std::string policy_hash;
    std::string env_hash;
    std::uint64_t seed = 0;
};

/// Writes (or, with append set, extends) an episode file. Appending checks
/// the on-disk header against the batch signature and hashes and throws
/// ModelError on mismatch; the original header (including its seed) is kept.
void write_episodes(const EpisodeBatch& batch, const std::string& policy_hash_hex,
                    const std::string& env_hash_hex, const std::string& path,
                    bool append = false);

EpisodeBatch read_episodes(const std::string& path, EpisodeFileHeader* header_out = nullptr);

/// Whole-file helpers.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ope::io
