#include "hamrec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace hamrec {

LogFormat log_format_from_string(const std::string& s) {
    if (s == "auto") return LogFormat::Auto;
    if (s == "csv") return LogFormat::Csv;
    if (s == "tsv") return LogFormat::Tsv;
    throw std::invalid_argument("unknown log format: " + s);
}

std::string to_string(LogFormat format) {
    switch (format) {
        case LogFormat::Auto: return "auto";
        case LogFormat::Csv: return "csv";
        case LogFormat::Tsv: return "tsv";
    }
    return "auto";
}

namespace {

std::vector<std::string> split_fields(const std::string& line, const std::string& delim) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(delim, pos);
        if (next == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + delim.size();
    }
    return fields;
}

std::string sniff_delimiter(const std::string& line, LogFormat format) {
    switch (format) {
        case LogFormat::Csv: return ",";
        case LogFormat::Tsv: return "\t";
        case LogFormat::Auto: break;
    }
    if (line.find("::") != std::string::npos) return "::";
    if (line.find('\t') != std::string::npos) return "\t";
    return ",";
}

bool is_header_field(std::string f) {
    for (char& c : f) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    static const char* names[] = {"user", "userid", "user_id", "item",   "itemid",
                                  "item_id", "movieid", "movie_id", "rating", "score",
                                  "timestamp", "time", "ts"};
    for (const char* n : names) {
        if (f == n) return true;
    }
    return false;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

bool parse_i64(const std::string& s, std::int64_t& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

InteractionDataset load_interactions(const std::string& path,
                                     LogFormat format,
                                     std::optional<double> min_rating) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_interactions: cannot open " + path);

    InteractionDataset ds;
    std::unordered_set<std::uint64_t> seen;
    std::string delim;
    std::string line;
    std::size_t line_no = 0;
    bool first_data_line = true;

    while (std::getline(is, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (delim.empty()) delim = sniff_delimiter(line, format);

        auto fields = split_fields(line, delim);
        if (first_data_line) {
            first_data_line = false;
            bool header = false;
            for (const auto& f : fields) {
                if (is_header_field(trim(f))) header = true;
            }
            if (header) continue;
        }
        if (fields.size() < 2) {
            throw std::runtime_error("load_interactions: malformed row at line " +
                                     std::to_string(line_no) + " of " + path);
        }

        std::string user_id = trim(fields[0]);
        std::string item_id = trim(fields[1]);
        if (user_id.empty() || item_id.empty()) {
            throw std::runtime_error("load_interactions: empty id at line " +
                                     std::to_string(line_no) + " of " + path);
        }

        if (min_rating.has_value()) {
            if (fields.size() < 3) {
                throw std::runtime_error(
                    "load_interactions: rating threshold set but no rating column at line " +
                    std::to_string(line_no) + " of " + path);
            }
            double rating = 0.0;
            if (!parse_double(trim(fields[2]), rating)) {
                throw std::runtime_error("load_interactions: bad rating at line " +
                                         std::to_string(line_no) + " of " + path);
            }
            if (rating < *min_rating) continue;
        }

        std::int64_t ts = -1;
        if (fields.size() >= 4) {
            if (!parse_i64(trim(fields[3]), ts)) ts = -1;
        }

        auto [uit, user_new] = ds.user_index.try_emplace(
            user_id, static_cast<std::uint32_t>(ds.user_ids.size()));
        if (user_new) ds.user_ids.push_back(user_id);
        auto [iit, item_new] = ds.item_index.try_emplace(
            item_id, static_cast<std::uint32_t>(ds.item_ids.size()));
        if (item_new) ds.item_ids.push_back(item_id);

        std::uint32_t u = uit->second;
        std::uint32_t i = iit->second;
        if (seen.insert((std::uint64_t{u} << 32) | i).second) {
            ds.interactions.push_back({u, i, ts});
        }
    }

    if (ds.interactions.empty()) {
        throw std::runtime_error("load_interactions: no interactions left after filtering " +
                                 path);
    }
    ds.num_users = static_cast<std::uint32_t>(ds.user_ids.size());
    ds.num_items = static_cast<std::uint32_t>(ds.item_ids.size());
    return ds;
}

namespace {

// Re-index survivors densely in first-appearance order of the kept
// interaction list, pulling id maps from the parent.
InteractionDataset reindex(const InteractionDataset& parent,
                           const std::vector<Interaction>& kept) {
    InteractionDataset out;
    std::vector<std::uint32_t> user_map(parent.num_users, UINT32_MAX);
    std::vector<std::uint32_t> item_map(parent.num_items, UINT32_MAX);
    out.interactions.reserve(kept.size());
    for (const auto& inter : kept) {
        std::uint32_t& u = user_map[inter.user];
        if (u == UINT32_MAX) {
            u = static_cast<std::uint32_t>(out.user_ids.size());
            out.user_ids.push_back(parent.user_ids[inter.user]);
        }
        std::uint32_t& i = item_map[inter.item];
        if (i == UINT32_MAX) {
            i = static_cast<std::uint32_t>(out.item_ids.size());
            out.item_ids.push_back(parent.item_ids[inter.item]);
        }
        out.interactions.push_back({u, i, inter.timestamp});
    }
    out.num_users = static_cast<std::uint32_t>(out.user_ids.size());
    out.num_items = static_cast<std::uint32_t>(out.item_ids.size());
    for (std::uint32_t u = 0; u < out.num_users; ++u) out.user_index[out.user_ids[u]] = u;
    for (std::uint32_t i = 0; i < out.num_items; ++i) out.item_index[out.item_ids[i]] = i;
    return out;
}

}  // namespace

KCoreResult k_core_filter(const InteractionDataset& ds, std::uint32_t k) {
    if (k < 1) throw std::invalid_argument("k_core_filter: k must be >= 1");

    std::vector<std::uint32_t> user_deg(ds.num_users, 0);
    std::vector<std::uint32_t> item_deg(ds.num_items, 0);
    for (const auto& inter : ds.interactions) {
        ++user_deg[inter.user];
        ++item_deg[inter.item];
    }

    std::vector<char> user_alive(ds.num_users, 1);
    std::vector<char> item_alive(ds.num_items, 1);
    KCoreResult result;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::uint32_t u = 0; u < ds.num_users; ++u) {
            if (user_alive[u] && user_deg[u] < k) {
                user_alive[u] = 0;
                changed = true;
            }
        }
        for (std::uint32_t i = 0; i < ds.num_items; ++i) {
            if (item_alive[i] && item_deg[i] < k) {
                item_alive[i] = 0;
                changed = true;
            }
        }
        if (!changed) break;
        ++result.rounds;
        std::fill(user_deg.begin(), user_deg.end(), 0);
        std::fill(item_deg.begin(), item_deg.end(), 0);
        for (const auto& inter : ds.interactions) {
            if (user_alive[inter.user] && item_alive[inter.item]) {
                ++user_deg[inter.user];
                ++item_deg[inter.item];
            }
        }
    }

    std::vector<Interaction> kept;
    kept.reserve(ds.interactions.size());
    for (const auto& inter : ds.interactions) {
        if (user_alive[inter.user] && item_alive[inter.item]) kept.push_back(inter);
    }
    result.dataset = reindex(ds, kept);
    result.removed_users = ds.num_users - result.dataset.num_users;
    result.removed_items = ds.num_items - result.dataset.num_items;
    return result;
}

SplitDataset split(const InteractionDataset& ds,
                   double test_frac,
                   double valid_frac_of_train,
                   std::uint64_t seed) {
    if (!(test_frac > 0.0 && test_frac < 1.0)) {
        throw std::invalid_argument("split: test_frac must be in (0, 1)");
    }
    if (!(valid_frac_of_train >= 0.0 && valid_frac_of_train < 1.0)) {
        throw std::invalid_argument("split: valid_frac_of_train must be in [0, 1)");
    }

    const std::size_t n = ds.interactions.size();
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);

    std::size_t n_test = static_cast<std::size_t>(std::llround(test_frac * double(n)));
    n_test = std::min(n_test, n);
    std::size_t n_pool = n - n_test;
    std::size_t n_valid =
        static_cast<std::size_t>(std::llround(valid_frac_of_train * double(n_pool)));
    n_valid = std::min(n_valid, n_pool);

    // 0 = train, 1 = validation, 2 = test
    std::vector<char> part(n, 0);
    for (std::size_t i = 0; i < n_test; ++i) part[perm[i]] = 2;
    for (std::size_t i = n_test; i < n_test + n_valid; ++i) part[perm[i]] = 1;

    // Users whose interactions all fell into test would be degree-0 in the
    // training graph; move one of their test interactions back to train.
    SplitDataset out;
    std::vector<std::uint32_t> train_deg(ds.num_users, 0);
    std::vector<std::vector<std::size_t>> test_rows(ds.num_users);
    for (std::size_t i = 0; i < n; ++i) {
        if (part[i] == 0) ++train_deg[ds.interactions[i].user];
        if (part[i] == 2) test_rows[ds.interactions[i].user].push_back(i);
    }
    for (std::uint32_t u = 0; u < ds.num_users; ++u) {
        if (train_deg[u] == 0 && !test_rows[u].empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, test_rows[u].size() - 1);
            std::size_t row = test_rows[u][pick(rng)];
            part[row] = 0;
            out.rebalanced.push_back(ds.interactions[row]);
        }
    }

    out.num_users = ds.num_users;
    out.num_items = ds.num_items;
    out.user_ids = ds.user_ids;
    out.item_ids = ds.item_ids;
    out.user_index = ds.user_index;
    out.item_index = ds.item_index;
    out.seed = seed;
    out.test_frac = test_frac;
    out.valid_frac_of_train = valid_frac_of_train;
    for (std::size_t i = 0; i < n; ++i) {
        switch (part[i]) {
            case 0: out.train.push_back(ds.interactions[i]); break;
            case 1: out.validation.push_back(ds.interactions[i]); break;
            case 2: out.test.push_back(ds.interactions[i]); break;
        }
    }
    return out;
}

SplitManifest make_manifest(const SplitDataset& split,
                            const std::string& dataset_path,
                            LogFormat format,
                            std::optional<double> min_rating,
                            std::uint32_t kcore) {
    SplitManifest m;
    m.dataset_path = dataset_path;
    m.format = to_string(format);
    m.min_rating = min_rating;
    m.kcore = kcore;
    m.seed = split.seed;
    m.test_frac = split.test_frac;
    m.valid_frac_of_train = split.valid_frac_of_train;
    m.num_users = split.num_users;
    m.num_items = split.num_items;
    m.train_count = split.train.size();
    m.validation_count = split.validation.size();
    m.test_count = split.test.size();
    m.rebalanced = split.rebalanced;
    return m;
}

void save_manifest(const std::string& path, const SplitManifest& m) {
    nlohmann::json j;
    j["dataset"] = m.dataset_path;
    j["format"] = m.format;
    if (m.min_rating.has_value()) {
        j["min_rating"] = *m.min_rating;
    } else {
        j["min_rating"] = nullptr;
    }
    j["kcore"] = m.kcore;
    j["seed"] = m.seed;
    j["test_frac"] = m.test_frac;
    j["valid_frac_of_train"] = m.valid_frac_of_train;
    j["num_users"] = m.num_users;
    j["num_items"] = m.num_items;
    j["counts"] = {{"train", m.train_count},
                   {"validation", m.validation_count},
                   {"test", m.test_count}};
    auto moves = nlohmann::json::array();
    for (const auto& inter : m.rebalanced) {
        moves.push_back({inter.user, inter.item});
    }
    j["rebalanced"] = moves;

    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_manifest: cannot open " + path);
    os << j.dump(2) << "\n";
}

SplitManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_manifest: cannot open " + path);
    nlohmann::json j;
    is >> j;

    SplitManifest m;
    m.dataset_path = j.at("dataset").get<std::string>();
    m.format = j.at("format").get<std::string>();
    if (!j.at("min_rating").is_null()) m.min_rating = j.at("min_rating").get<double>();
    m.kcore = j.at("kcore").get<std::uint32_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.test_frac = j.at("test_frac").get<double>();
    m.valid_frac_of_train = j.at("valid_frac_of_train").get<double>();
    m.num_users = j.at("num_users").get<std::uint32_t>();
    m.num_items = j.at("num_items").get<std::uint32_t>();
    m.train_count = j.at("counts").at("train").get<std::uint64_t>();
    m.validation_count = j.at("counts").at("validation").get<std::uint64_t>();
    m.test_count = j.at("counts").at("test").get<std::uint64_t>();
    for (const auto& mv : j.at("rebalanced")) {
        m.rebalanced.push_back({mv.at(0).get<std::uint32_t>(), mv.at(1).get<std::uint32_t>(), -1});
    }
    return m;
}

void verify_manifest(const SplitManifest& m, const SplitDataset& s) {
    auto fail = [](const std::string& what) {
        throw std::runtime_error("manifest mismatch: " + what);
    };
    if (m.seed != s.seed) fail("seed");
    if (m.test_frac != s.test_frac) fail("test_frac");
    if (m.valid_frac_of_train != s.valid_frac_of_train) fail("valid_frac_of_train");
    if (m.num_users != s.num_users) fail("num_users");
    if (m.num_items != s.num_items) fail("num_items");
    if (m.train_count != s.train.size()) fail("train count");
    if (m.validation_count != s.validation.size()) fail("validation count");
    if (m.test_count != s.test.size()) fail("test count");
    if (m.rebalanced.size() != s.rebalanced.size()) fail("rebalanced count");
    for (std::size_t i = 0; i < m.rebalanced.size(); ++i) {
        if (m.rebalanced[i].user != s.rebalanced[i].user ||
            m.rebalanced[i].item != s.rebalanced[i].item) {
            fail("rebalanced moves");
        }
    }
}

}  // namespace hamrec
