#include "hamrec/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hamrec {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean value '" + v + "'");
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);

    std::map<std::string, std::function<void(const std::string&)>> setters = {
        {"dataset", [this](const std::string& v) { dataset = v; }},
        {"format", [this](const std::string& v) { format = v; }},
        {"min_rating", [this](const std::string& v) { min_rating = std::stod(v); }},
        {"kcore", [this](const std::string& v) { kcore = std::stoul(v); }},
        {"test_frac", [this](const std::string& v) { test_frac = std::stod(v); }},
        {"valid_frac", [this](const std::string& v) { valid_frac = std::stod(v); }},
        {"split_seed", [this](const std::string& v) { split_seed = std::stoull(v); }},
        {"bits", [this](const std::string& v) { bits = std::stoul(v); }},
        {"layers", [this](const std::string& v) { layers = std::stoul(v); }},
        {"beta0", [this](const std::string& v) { beta0 = std::stod(v); }},
        {"beta_growth", [this](const std::string& v) { beta_growth = std::stod(v); }},
        {"beta_interval", [this](const std::string& v) { beta_interval = std::stoul(v); }},
        {"beta_cap", [this](const std::string& v) { beta_cap = std::stod(v); }},
        {"lr", [this](const std::string& v) { lr = std::stod(v); }},
        {"lambda1", [this](const std::string& v) { lambda1 = std::stod(v); }},
        {"lambda2", [this](const std::string& v) { lambda2 = std::stod(v); }},
        {"margin", [this](const std::string& v) { margin = std::stod(v); }},
        {"rank_initial", [this](const std::string& v) { rank_initial = parse_bool(v); }},
        {"rank_final", [this](const std::string& v) { rank_final = parse_bool(v); }},
        {"negatives", [this](const std::string& v) { negatives = std::stoul(v); }},
        {"node_dropout", [this](const std::string& v) { node_dropout = std::stod(v); }},
        {"bit_dropout", [this](const std::string& v) { bit_dropout = std::stod(v); }},
        {"batch", [this](const std::string& v) { batch = std::stoull(v); }},
        {"patience", [this](const std::string& v) { patience = std::stoul(v); }},
        {"max_epochs", [this](const std::string& v) { max_epochs = std::stoul(v); }},
        {"train_seed", [this](const std::string& v) { train_seed = std::stoull(v); }},
        {"validation_k", [this](const std::string& v) { validation_k = std::stoul(v); }},
        {"eval_ks", [this](const std::string& v) { eval_ks = v; }},
        {"hr_any_hit", [this](const std::string& v) { hr_any_hit = parse_bool(v); }},
        {"threads", [this](const std::string& v) { threads = std::stoul(v); }},
        {"out_dir", [this](const std::string& v) { out_dir = v; }},
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        std::size_t eq = text.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config: missing '=' at " + path + ":" +
                                     std::to_string(line_no));
        }
        std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw std::runtime_error("config: unknown key '" + key + "' at " + path + ":" +
                                     std::to_string(line_no));
        }
        it->second(value);
    }
}

std::string RunConfig::to_key_values() const {
    std::ostringstream os;
    os << "# data\n";
    os << "dataset = " << dataset << "\n";
    os << "format = " << format << "\n";
    os << "min_rating = " << fmt_double(min_rating) << "\n";
    os << "kcore = " << kcore << "\n";
    os << "test_frac = " << fmt_double(test_frac) << "\n";
    os << "valid_frac = " << fmt_double(valid_frac) << "\n";
    os << "split_seed = " << split_seed << "\n";
    os << "\n# model\n";
    os << "bits = " << bits << "\n";
    os << "layers = " << layers << "\n";
    os << "beta0 = " << fmt_double(beta0) << "\n";
    os << "beta_growth = " << fmt_double(beta_growth) << "\n";
    os << "beta_interval = " << beta_interval << "\n";
    os << "beta_cap = " << fmt_double(beta_cap) << "\n";
    os << "\n# loss / optimizer\n";
    os << "lr = " << fmt_double(lr) << "\n";
    os << "lambda1 = " << fmt_double(lambda1) << "\n";
    os << "lambda2 = " << fmt_double(lambda2) << "\n";
    os << "margin = " << fmt_double(margin) << "\n";
    os << "rank_initial = " << (rank_initial ? "true" : "false") << "\n";
    os << "rank_final = " << (rank_final ? "true" : "false") << "\n";
    os << "negatives = " << negatives << "\n";
    os << "node_dropout = " << fmt_double(node_dropout) << "\n";
    os << "bit_dropout = " << fmt_double(bit_dropout) << "\n";
    os << "batch = " << batch << "\n";
    os << "patience = " << patience << "\n";
    os << "max_epochs = " << max_epochs << "\n";
    os << "train_seed = " << train_seed << "\n";
    os << "validation_k = " << validation_k << "\n";
    os << "\n# evaluation\n";
    os << "eval_ks = " << eval_ks << "\n";
    os << "hr_any_hit = " << (hr_any_hit ? "true" : "false") << "\n";
    os << "\n# execution\n";
    os << "threads = " << threads << "\n";
    os << "out_dir = " << out_dir << "\n";
    return os.str();
}

void RunConfig::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("config: cannot write " + path);
    os << to_key_values();
}

std::vector<std::uint32_t> RunConfig::parse_eval_ks() const {
    std::vector<std::uint32_t> ks;
    std::string token;
    std::istringstream is(eval_ks);
    while (std::getline(is, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        ks.push_back(static_cast<std::uint32_t>(std::stoul(token)));
    }
    if (ks.empty()) throw std::invalid_argument("config: eval_ks is empty");
    return ks;
}

std::string RunConfig::resolved_out_dir() const {
    if (!out_dir.empty()) return out_dir;
    if (const char* env = std::getenv("HAMREC_OUT")) return env;
    return "out";
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.bits = bits;
    cfg.layers = layers;
    cfg.loss.lambda1 = lambda1;
    cfg.loss.lambda2 = lambda2;
    cfg.loss.margin = margin;
    cfg.loss.rank_initial = rank_initial;
    cfg.loss.rank_final = rank_final;
    cfg.loss.negatives_per_positive = negatives;
    cfg.adam.lr = lr;
    cfg.dropout.node_ratio = node_dropout;
    cfg.dropout.bit_ratio = bit_dropout;
    cfg.dropout.enabled = node_dropout > 0.0 || bit_dropout > 0.0;
    cfg.schedule.beta0 = beta0;
    cfg.schedule.beta_growth = beta_growth;
    cfg.schedule.beta_interval = beta_interval;
    cfg.schedule.beta_cap = beta_cap;
    cfg.schedule.max_epochs = max_epochs;
    cfg.schedule.patience = patience;
    cfg.schedule.batch_size = batch;
    cfg.schedule.validation_k = validation_k;
    cfg.seed = train_seed;
    cfg.threads = threads;
    return cfg;
}

}  // namespace hamrec
