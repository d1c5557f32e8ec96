#include "blade/policy.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "blade/errors.hpp"
#include "blade/kernels.hpp"

namespace blade {
namespace {

void check_ctx(const PolicyParams& params, std::uint32_t ctx) {
    if (ctx >= params.n_contexts) {
        throw std::invalid_argument("policy: context id " + std::to_string(ctx) +
                                    " out of range");
    }
}

void check_temperature(double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("policy: temperature must be positive");
    }
}

// Marks `prefix` as masked-out; throws on duplicates/invalid ids.
void build_mask(const PolicyParams& params, std::span<const ItemId> prefix,
                std::vector<std::uint8_t>& mask) {
    mask.assign(params.n_items, 1);
    for (ItemId item : prefix) {
        if (item >= params.n_items) {
            throw std::invalid_argument("policy: item id out of range");
        }
        if (!mask[item]) {
            throw std::invalid_argument("policy: duplicate item in list");
        }
        mask[item] = 0;
    }
    if (prefix.size() >= params.n_items) {
        throw std::logic_error("policy: prefix exhausts the catalog");
    }
}

}  // namespace

PolicyParams PolicyParams::zeros(std::uint32_t n_contexts, std::uint32_t n_items,
                                 std::uint32_t list_len) {
    if (n_contexts < 1 || n_items < 2) {
        throw std::invalid_argument("PolicyParams: need >=1 context and >=2 items");
    }
    if (list_len < 1 || list_len > n_items) {
        throw std::invalid_argument("PolicyParams: list_len must be in [1, n_items]");
    }
    PolicyParams p;
    p.n_contexts = n_contexts;
    p.n_items = n_items;
    p.list_len = list_len;
    p.logits.assign(std::size_t{n_contexts} * n_items, 0.0);
    return p;
}

std::vector<double> step_distribution(const PolicyParams& params,
                                      std::uint32_t ctx,
                                      std::span<const ItemId> prefix,
                                      double temperature) {
    check_ctx(params, ctx);
    check_temperature(temperature);
    std::vector<std::uint8_t> mask;
    build_mask(params, prefix, mask);
    std::vector<double> probs(params.n_items);
    kernels::masked_softmax(params.row(ctx), mask.data(), 1.0 / temperature,
                            probs.data(), params.n_items);
    return probs;
}

Rollout sample_list(const PolicyParams& params, std::uint32_t ctx,
                    double temperature, Rng& rng) {
    check_ctx(params, ctx);
    check_temperature(temperature);
    const double inv_temp = 1.0 / temperature;
    const std::uint32_t n = params.n_items;
    const std::uint32_t k = params.list_len;

    Rollout ro;
    ro.list.items.reserve(k);
    ro.step_logprobs.reserve(k);

    std::vector<std::uint8_t> mask(n, 1);
    std::vector<double> probs(n);
    for (std::uint32_t t = 0; t < k; ++t) {
        const double lse = kernels::masked_softmax(params.row(ctx), mask.data(),
                                                   inv_temp, probs.data(), n);
        const double u = rng.uniform();
        double acc = 0.0;
        std::uint32_t pick = n;
        for (std::uint32_t i = 0; i < n; ++i) {
            if (!mask[i]) continue;
            acc += probs[i];
            pick = i;
            if (acc > u) break;
        }
        assert(pick < n);
        ro.list.items.push_back(pick);
        const double lp = params.row(ctx)[pick] * inv_temp - lse;
        ro.step_logprobs.push_back(lp);
        ro.total_logprob += lp;
        mask[pick] = 0;
    }
    return ro;
}

ListLogProb logprob(const PolicyParams& params, std::uint32_t ctx,
                    const RecList& list, double temperature) {
    check_ctx(params, ctx);
    check_temperature(temperature);
    if (list.items.empty()) {
        throw std::invalid_argument("logprob: empty list");
    }
    const double inv_temp = 1.0 / temperature;
    const std::uint32_t n = params.n_items;

    ListLogProb out;
    out.step_logprobs.reserve(list.items.size());

    std::vector<std::uint8_t> mask(n, 1);
    std::vector<double> probs(n);
    for (ItemId item : list.items) {
        if (item >= n) throw std::invalid_argument("logprob: item id out of range");
        if (!mask[item]) throw std::invalid_argument("logprob: duplicate item in list");
        const double lse = kernels::masked_softmax(params.row(ctx), mask.data(),
                                                   inv_temp, probs.data(), n);
        const double lp = params.row(ctx)[item] * inv_temp - lse;
        out.step_logprobs.push_back(lp);
        out.total += lp;
        mask[item] = 0;
    }
    return out;
}

std::vector<double> grad_logprob(const PolicyParams& params, std::uint32_t ctx,
                                 const RecList& list, double temperature) {
    check_ctx(params, ctx);
    check_temperature(temperature);
    if (list.items.empty()) {
        throw std::invalid_argument("grad_logprob: empty list");
    }
    const double inv_temp = 1.0 / temperature;
    const std::uint32_t n = params.n_items;

    std::vector<double> grad(params.logits.size(), 0.0);
    double* grow = grad.data() + std::size_t{ctx} * n;

    std::vector<std::uint8_t> mask(n, 1);
    std::vector<double> probs(n);
    for (ItemId item : list.items) {
        if (item >= n) throw std::invalid_argument("grad_logprob: item id out of range");
        if (!mask[item]) throw std::invalid_argument("grad_logprob: duplicate item in list");
        kernels::masked_softmax(params.row(ctx), mask.data(), inv_temp,
                                probs.data(), n);
        // d log p(item) / d logit_j = (delta_ij - p_j) / temperature over the
        // unmasked items; masked probs are exactly 0 so a plain axpy works.
        kernels::axpy(-inv_temp, probs.data(), grow, n);
        grow[item] += inv_temp;
        mask[item] = 0;
    }
    return grad;
}

RecList greedy_decode(const PolicyParams& params, std::uint32_t ctx) {
    check_ctx(params, ctx);
    const std::uint32_t n = params.n_items;
    const double* row = params.row(ctx);

    RecList list;
    list.items.reserve(params.list_len);
    std::vector<std::uint8_t> mask(n, 1);
    for (std::uint32_t t = 0; t < params.list_len; ++t) {
        // Softmax is monotone in the logits, so the argmax of the step
        // distribution is the argmax of the unmasked logits; scanning
        // ascending ids keeps ties on the lowest id.
        std::uint32_t best = n;
        for (std::uint32_t i = 0; i < n; ++i) {
            if (mask[i] && (best == n || row[i] > row[best])) best = i;
        }
        list.items.push_back(best);
        mask[best] = 0;
    }
    return list;
}

void write_logits(std::ostream& out, const PolicyParams& params) {
    out << "shape " << params.n_contexts << ' ' << params.n_items << ' '
        << params.list_len << '\n';
    char buf[32];
    for (std::uint32_t c = 0; c < params.n_contexts; ++c) {
        const double* row = params.row(c);
        for (std::uint32_t i = 0; i < params.n_items; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out << buf << (i + 1 == params.n_items ? '\n' : ' ');
        }
    }
}

PolicyParams read_logits(std::istream& in, std::size_t& lineno) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("tensor line " + std::to_string(lineno + 1) +
                         ": missing shape line");
    }
    ++lineno;
    std::istringstream hdr(line);
    std::string tag;
    std::uint32_t n_contexts = 0, n_items = 0, list_len = 0;
    if (!(hdr >> tag >> n_contexts >> n_items >> list_len) || tag != "shape") {
        throw ParseError("tensor line " + std::to_string(lineno) +
                         ": expected \"shape <contexts> <items> <K>\"");
    }
    PolicyParams params = PolicyParams::zeros(n_contexts, n_items, list_len);
    for (std::uint32_t c = 0; c < n_contexts; ++c) {
        if (!std::getline(in, line)) {
            throw ParseError("tensor line " + std::to_string(lineno + 1) +
                             ": missing logit row");
        }
        ++lineno;
        std::istringstream row(line);
        for (std::uint32_t i = 0; i < n_items; ++i) {
            if (!(row >> params.row(c)[i])) {
                throw ParseError("tensor line " + std::to_string(lineno) +
                                 ": expected " + std::to_string(n_items) +
                                 " values");
            }
        }
    }
    return params;
}

void save_params(const std::filesystem::path& path, const PolicyParams& params) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_params: cannot open " + path.string());
    out << "blade-tensor 1\n";
    write_logits(out, params);
    if (!out) throw std::runtime_error("save_params: write failed for " + path.string());
}

PolicyParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_params: cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("tensor line 1: empty file");
    ++lineno;
    if (line != "blade-tensor 1") {
        throw VersionError("unsupported tensor header: " + line);
    }
    return read_logits(in, lineno);
}

}  // namespace blade
