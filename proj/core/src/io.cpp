#include "ope/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "ope/rng.hpp"

namespace ope::io {

namespace {

constexpr const char* kModelMagic = "ope-absorb-model";
constexpr const char* kPolicyMagic = "ope-absorb-policy";

void append_double(std::string& out, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    out += buf;
}

class TokenReader {
public:
    explicit TokenReader(const std::string& text) : stream_(text) {}

    std::string word(const char* what) {
        std::string token;
        if (!(stream_ >> token))
            throw ModelError(std::string("parse error: expected ") + what);
        return token;
    }

    void expect(const char* literal) {
        const std::string token = word(literal);
        if (token != literal)
            throw ModelError("parse error: expected '" + std::string(literal) + "', got '" +
                             token + "'");
    }

    std::int64_t integer(const char* what) {
        const std::string token = word(what);
        try {
            return std::stoll(token);
        } catch (const std::exception&) {
            throw ModelError(std::string("parse error: bad integer for ") + what);
        }
    }

    double real(const char* what) {
        const std::string token = word(what);
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end == nullptr || *end != '\0')
            throw ModelError(std::string("parse error: bad number for ") + what);
        return v;
    }

private:
    std::istringstream stream_;
};

}  // namespace

std::string format_double(double value) {
    std::string out;
    append_double(out, value);
    return out;
}

std::string serialize_model(const TabularMdp& mdp) {
    const std::int32_t n = mdp.n_states();
    const std::int32_t h = mdp.n_actions();
    std::string out;
    out.reserve(static_cast<std::size_t>(mdp.pair_count()) * (n + 1) * 4 + 1024);
    out += kModelMagic;
    out += " 1\n";
    out += "n_states " + std::to_string(n) + "\n";
    out += "n_actions " + std::to_string(h) + "\n";
    out += "reward_noise_halfwidth ";
    append_double(out, mdp.reward_noise_halfwidth());
    out += "\ninitial_dist\n";
    for (std::int32_t s = 0; s < n; ++s) {
        if (s > 0) out += ' ';
        append_double(out, mdp.initial_dist()(s));
    }
    out += "\nmean_reward\n";
    for (std::int32_t s = 0; s < n; ++s) {
        for (std::int32_t a = 0; a < h; ++a) {
            if (a > 0) out += ' ';
            append_double(out, mdp.mean_reward(s, a));
        }
        out += '\n';
    }
    out += "transition\n";
    for (std::int32_t s = 0; s < n; ++s) {
        for (std::int32_t a = 0; a < h; ++a) {
            const std::vector<double> row = mdp.dense_transition_row(s, a);
            for (std::int32_t j = 0; j <= n; ++j) {
                if (j > 0) out += ' ';
                append_double(out, row[static_cast<std::size_t>(j)]);
            }
            out += '\n';
        }
    }
    return out;
}

void write_model(const TabularMdp& mdp, const std::string& path) {
    write_text_file(path, serialize_model(mdp));
}

TabularMdp read_model(const std::string& path) {
    const std::string text = read_text_file(path);
    TokenReader reader(text);
    reader.expect(kModelMagic);
    const std::int64_t version = reader.integer("format version");
    if (version != 1) throw ModelError("model file: unsupported format version");
    reader.expect("n_states");
    const std::int32_t n = static_cast<std::int32_t>(reader.integer("n_states"));
    reader.expect("n_actions");
    const std::int32_t h = static_cast<std::int32_t>(reader.integer("n_actions"));
    if (n < 1 || h < 1) throw ModelError("model file: bad dimensions");
    reader.expect("reward_noise_halfwidth");
    const double halfwidth = reader.real("reward_noise_halfwidth");
    reader.expect("initial_dist");
    Eigen::VectorXd mu(n);
    for (std::int32_t s = 0; s < n; ++s) mu(s) = reader.real("initial_dist entry");
    reader.expect("mean_reward");
    Eigen::MatrixXd reward(n, h);
    for (std::int32_t s = 0; s < n; ++s)
        for (std::int32_t a = 0; a < h; ++a) reward(s, a) = reader.real("mean_reward entry");
    reader.expect("transition");
    std::vector<std::vector<TabularMdp::Transition>> rows(
        static_cast<std::size_t>(n) * static_cast<std::size_t>(h));
    for (std::int32_t s = 0; s < n; ++s) {
        for (std::int32_t a = 0; a < h; ++a) {
            auto& row = rows[static_cast<std::size_t>(pair_index(s, a, h))];
            for (std::int32_t j = 0; j <= n; ++j) {
                const double p = reader.real("transition entry");
                if (p != 0.0) row.push_back({j, p});
            }
        }
    }
    return TabularMdp(n, h, std::move(rows), std::move(reward), std::move(mu), halfwidth);
}

std::string serialize_policy(const Policy& policy) {
    std::string out;
    out += kPolicyMagic;
    out += " 1\n";
    out += "n_states " + std::to_string(policy.n_states()) + "\n";
    out += "n_actions " + std::to_string(policy.n_actions()) + "\n";
    out += "probs\n";
    for (std::int32_t s = 0; s < policy.n_states(); ++s) {
        for (std::int32_t a = 0; a < policy.n_actions(); ++a) {
            if (a > 0) out += ' ';
            append_double(out, policy.prob(s, a));
        }
        out += '\n';
    }
    return out;
}

void write_policy(const Policy& policy, const std::string& path) {
    write_text_file(path, serialize_policy(policy));
}

Policy read_policy(const std::string& path) {
    const std::string text = read_text_file(path);
    TokenReader reader(text);
    reader.expect(kPolicyMagic);
    const std::int64_t version = reader.integer("format version");
    if (version != 1) throw ModelError("policy file: unsupported format version");
    reader.expect("n_states");
    const std::int32_t n = static_cast<std::int32_t>(reader.integer("n_states"));
    reader.expect("n_actions");
    const std::int32_t h = static_cast<std::int32_t>(reader.integer("n_actions"));
    if (n < 1 || h < 1) throw ModelError("policy file: bad dimensions");
    reader.expect("probs");
    Eigen::MatrixXd probs(n, h);
    for (std::int32_t s = 0; s < n; ++s)
        for (std::int32_t a = 0; a < h; ++a) probs(s, a) = reader.real("probs entry");
    return Policy(std::move(probs));
}

std::uint64_t model_hash(const TabularMdp& mdp) { return fnv1a64(serialize_model(mdp)); }

std::uint64_t policy_hash(const Policy& policy) { return fnv1a64(serialize_policy(policy)); }

std::string hash_hex(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
    return buf;
}

void write_episodes(const EpisodeBatch& batch, const std::string& policy_hash_hex,
                    const std::string& env_hash_hex, const std::string& path, bool append) {
    std::string body;
    for (const Episode& episode : batch.episodes) {
        body += "{\"states\":[";
        for (std::size_t i = 0; i < episode.states.size(); ++i) {
            if (i > 0) body += ',';
            body += std::to_string(episode.states[i]);
        }
        body += "],\"actions\":[";
        for (std::size_t i = 0; i < episode.actions.size(); ++i) {
            if (i > 0) body += ',';
            body += std::to_string(episode.actions[i]);
        }
        body += "],\"rewards\":[";
        for (std::size_t i = 0; i < episode.rewards.size(); ++i) {
            if (i > 0) body += ',';
            append_double(body, episode.rewards[i]);
        }
        body += "],\"absorbed\":";
        body += episode.absorbed ? "true" : "false";
        body += "}\n";
    }

    if (append) {
        EpisodeFileHeader existing;
        read_episodes(path, &existing);  // validates the file and extracts the header
        if (existing.n_states != batch.n_states || existing.n_actions != batch.n_actions ||
            existing.truncation != batch.truncation || existing.policy_hash != policy_hash_hex ||
            existing.env_hash != env_hash_hex)
            throw ModelError("write_episodes: append signature mismatch for " + path);
        std::ofstream file(path, std::ios::binary | std::ios::app);
        if (!file) throw std::runtime_error("cannot open for append: " + path);
        file << body;
        if (!file) throw std::runtime_error("write failed: " + path);
        return;
    }

    std::string header = "{\"format_version\":1,\"n_states\":" + std::to_string(batch.n_states) +
                         ",\"n_actions\":" + std::to_string(batch.n_actions) +
                         ",\"H\":" + std::to_string(batch.truncation) + ",\"policy_hash\":\"" +
                         policy_hash_hex + "\",\"env_hash\":\"" + env_hash_hex +
                         "\",\"seed\":" + std::to_string(batch.seed) + "}\n";
    write_text_file(path, header + body);
}

EpisodeBatch read_episodes(const std::string& path, EpisodeFileHeader* header_out) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(file, line)) throw ModelError("episode file: missing header: " + path);

    nlohmann::json header = nlohmann::json::parse(line);
    EpisodeFileHeader info;
    info.format_version = header.at("format_version").get<int>();
    if (info.format_version != 1) throw ModelError("episode file: unsupported format version");
    info.n_states = header.at("n_states").get<std::int32_t>();
    info.n_actions = header.at("n_actions").get<std::int32_t>();
    info.truncation = header.at("H").get<std::int32_t>();
    info.policy_hash = header.at("policy_hash").get<std::string>();
    info.env_hash = header.at("env_hash").get<std::string>();
    info.seed = header.at("seed").get<std::uint64_t>();
    if (header_out != nullptr) *header_out = info;

    EpisodeBatch batch;
    batch.n_states = info.n_states;
    batch.n_actions = info.n_actions;
    batch.truncation = info.truncation;
    batch.seed = info.seed;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line);
        Episode episode;
        episode.states = record.at("states").get<std::vector<std::int32_t>>();
        episode.actions = record.at("actions").get<std::vector<std::int32_t>>();
        episode.rewards = record.at("rewards").get<std::vector<double>>();
        episode.absorbed = record.at("absorbed").get<bool>();
        episode.truncation = info.truncation;
        if (episode.states.size() != episode.actions.size() + 1 ||
            episode.actions.size() != episode.rewards.size())
            throw ModelError("episode file: inconsistent record lengths");
        batch.episodes.push_back(std::move(episode));
    }
    return batch;
}

std::string read_text_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open: " + path);
    std::ostringstream out;
    out << file.rdbuf();
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open for write: " + path);
    file << content;
    if (!file) throw std::runtime_error("write failed: " + path);
}

}  // namespace ope::io
