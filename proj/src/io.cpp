#include "structlim/io.hpp"

#include "structlim/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

namespace structlim {

namespace {

struct Token {
    std::string text;
    int line = 0;
};

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    int line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (c == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else {
            std::size_t start = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
                   text[i] != '#')
                ++i;
            out.push_back({std::string(text.substr(start, i - start)), line});
        }
    }
    return out;
}

bool parse_int(std::string_view s, long long& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw file_error(origin + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Structure parse_structure_text(std::string_view text, const std::string& origin) {
    std::vector<Token> tokens = tokenize(text);
    if (tokens.empty()) throw file_error(origin + ": empty input");

    std::size_t pos = 0;
    auto next = [&]() -> const Token& {
        if (pos >= tokens.size()) fail(origin, tokens.back().line, "unexpected end of input");
        return tokens[pos++];
    };

    const Token& header = next();
    bool graph_format = header.text == "graph";
    if (!graph_format && header.text != "structure")
        fail(origin, header.line, "expected 'structure' or 'graph' header");

    const Token& size_tok = next();
    long long n = -1;
    if (!parse_int(size_tok.text, n) || n < 0)
        fail(origin, size_tok.line, "expected a universe size after the header");

    Signature sig;
    // Sections in file order; element cells stay raw tokens until the whole
    // file is read, so index-vs-label mode can be decided globally.
    std::vector<std::vector<std::vector<Token>>> raw_tuples;
    std::vector<std::pair<std::string, Token>> raw_constants;

    if (graph_format) {
        sig = Signature::graph();
        raw_tuples.emplace_back();
        while (pos < tokens.size()) {
            const Token& u = next();
            if (pos >= tokens.size()) fail(origin, u.line, "dangling edge endpoint");
            const Token& v = next();
            raw_tuples[0].push_back({u, v});
        }
    } else {
        int current = -1;
        while (pos < tokens.size()) {
            const Token& tok = next();
            if (tok.text == "rel") {
                const Token& decl = next();
                auto slash = decl.text.find('/');
                if (slash == std::string::npos)
                    fail(origin, decl.line, "expected name/arity after 'rel'");
                long long arity = 0;
                if (!parse_int(decl.text.substr(slash + 1), arity) || arity < 1)
                    fail(origin, decl.line, "bad relation arity");
                sig.relations.push_back({decl.text.substr(0, slash), static_cast<int>(arity)});
                raw_tuples.emplace_back();
                current = static_cast<int>(raw_tuples.size()) - 1;
            } else if (tok.text == "const") {
                const Token& name = next();
                const Token& value = next();
                sig.constants.push_back(name.text);
                raw_constants.emplace_back(name.text, value);
                current = -1;
            } else {
                if (current < 0) fail(origin, tok.line, "element list outside a 'rel' section");
                int arity = sig.relations[current].arity;
                std::vector<Token> tuple;
                tuple.push_back(tok);
                for (int i = 1; i < arity; ++i) {
                    if (pos >= tokens.size() || tokens[pos].text == "rel" ||
                        tokens[pos].text == "const")
                        fail(origin, tok.line, "tuple shorter than declared arity");
                    tuple.push_back(next());
                }
                raw_tuples[current].push_back(std::move(tuple));
            }
        }
    }

    try {
        sig.validate();
    } catch (const std::invalid_argument& e) {
        throw file_error(origin + ": " + e.what());
    }

    // Index mode only if every element token is an integer in [0, n).
    bool index_mode = true;
    auto visit_cells = [&](auto&& f) {
        for (const auto& rel : raw_tuples)
            for (const auto& tuple : rel)
                for (const Token& cell : tuple) f(cell);
        for (const auto& [name, cell] : raw_constants) f(cell);
    };
    visit_cells([&](const Token& cell) {
        long long value = 0;
        if (!parse_int(cell.text, value) || value < 0 || value >= n) index_mode = false;
    });

    std::map<std::string, int> by_label;
    std::vector<std::string> labels;
    auto resolve = [&](const Token& cell) -> int {
        if (index_mode) {
            long long value = 0;
            parse_int(cell.text, value);
            return static_cast<int>(value);
        }
        auto it = by_label.find(cell.text);
        if (it != by_label.end()) return it->second;
        int id = static_cast<int>(by_label.size());
        if (id >= n)
            fail(origin, cell.line,
                 "more distinct labels than the declared universe size " + std::to_string(n));
        by_label.emplace(cell.text, id);
        return id;
    };

    std::vector<std::vector<std::vector<int>>> tuples(raw_tuples.size());
    for (std::size_t r = 0; r < raw_tuples.size(); ++r) {
        for (const auto& raw : raw_tuples[r]) {
            std::vector<int> tuple;
            tuple.reserve(raw.size());
            for (const Token& cell : raw) tuple.push_back(resolve(cell));
            tuples[r].push_back(std::move(tuple));
        }
    }
    std::vector<int> constants;
    for (const auto& [name, cell] : raw_constants) constants.push_back(resolve(cell));

    if (!index_mode) {
        labels.resize(n);
        for (const auto& [text, id] : by_label) labels[id] = text;
        for (long long i = 0; i < n; ++i)
            if (labels[i].empty()) labels[i] = std::to_string(i);
    }

    // Normalize adj of a graph signature: drop loops, close under symmetry.
    int adj = sig.relation_index("adj");
    if (adj >= 0 && sig.relations[adj].arity == 2) {
        std::vector<std::vector<int>> normalized;
        for (const auto& t : tuples[adj]) {
            if (t[0] == t[1]) continue;
            normalized.push_back({t[0], t[1]});
            normalized.push_back({t[1], t[0]});
        }
        tuples[adj] = std::move(normalized);
    }

    try {
        return Structure(std::make_shared<const Signature>(std::move(sig)), static_cast<int>(n),
                         std::move(tuples), std::move(constants), std::move(labels));
    } catch (const std::invalid_argument& e) {
        throw file_error(origin + ": " + e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw file_error("cannot open file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Structure load_structure(const std::filesystem::path& path) {
    return parse_structure_text(read_text_file(path), path.string());
}

void save_graph(const Structure& s, std::ostream& out) {
    out << "graph " << s.size() << "\n";
    for (int v = 0; v < s.size(); ++v)
        for (int u : s.adjacent(v))
            if (v < u) out << v << " " << u << "\n";
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw file_error("cannot open manifest: " + path.string());
    Manifest out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string entry_path, label, extra;
        if (!(fields >> entry_path)) continue;
        if (fields >> label && fields >> extra)
            fail(path.string(), lineno, "expected 'path [label]'");
        std::filesystem::path p(entry_path);
        if (p.is_relative()) p = path.parent_path() / p;
        out.labels.push_back(label.empty() ? p.stem().string() : label);
        out.paths.push_back(std::move(p));
    }
    if (out.paths.empty()) throw file_error(path.string() + ": manifest lists no structures");
    return out;
}

}  // namespace structlim
