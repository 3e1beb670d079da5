#include "coord/snet/record.hpp"

#include <algorithm>
#include <sstream>

namespace coord::snet {

namespace {

std::vector<std::string> normalized(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

bool contains_sorted(const std::vector<std::string>& names, const std::string& name) {
    return std::binary_search(names.begin(), names.end(), name);
}

}  // namespace

Record& Record::set_field(const std::string& name, Payload value) {
    if (tags_.count(name) != 0) {
        throw RecordError("name '" + name + "' is already a tag of this record");
    }
    fields_[name] = std::move(value);
    return *this;
}

Record& Record::set_tag(const std::string& name, Tag value) {
    if (fields_.count(name) != 0) {
        throw RecordError("name '" + name + "' is already a field of this record");
    }
    tags_[name] = value;
    return *this;
}

const Payload& Record::field(const std::string& name) const {
    auto it = fields_.find(name);
    if (it == fields_.end()) {
        throw RecordError("record " + describe() + " has no field '" + name + "'");
    }
    return it->second;
}

Tag Record::tag(const std::string& name) const {
    auto it = tags_.find(name);
    if (it == tags_.end()) {
        throw RecordError("record " + describe() + " has no tag <" + name + ">");
    }
    return it->second;
}

std::optional<Tag> Record::find_tag(const std::string& name) const {
    auto it = tags_.find(name);
    if (it == tags_.end()) return std::nullopt;
    return it->second;
}

Payload Record::take_field(const std::string& name) {
    auto it = fields_.find(name);
    if (it == fields_.end()) {
        throw RecordError("record " + describe() + " has no field '" + name + "'");
    }
    Payload p = std::move(it->second);
    fields_.erase(it);
    return p;
}

void Record::erase_tag(const std::string& name) { tags_.erase(name); }

std::string Record::describe() const {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& [name, _] : fields_) {
        if (!first) os << ',';
        os << name;
        first = false;
    }
    for (const auto& [name, value] : tags_) {
        if (!first) os << ',';
        os << '<' << name << ">=" << value;
        first = false;
    }
    os << '}';
    return os.str();
}

bool operator==(const Record& a, const Record& b) {
    if (a.tags_ != b.tags_ || a.fields_.size() != b.fields_.size()) return false;
    auto it = b.fields_.begin();
    for (const auto& [name, payload] : a.fields_) {
        if (name != it->first || payload.address() != it->second.address()) return false;
        ++it;
    }
    return true;
}

TypePattern::TypePattern(std::initializer_list<std::string> field_names,
                         std::initializer_list<std::string> tag_names)
    : fields(normalized(field_names)), tags(normalized(tag_names)) {}

TypePattern::TypePattern(std::vector<std::string> field_names, std::vector<std::string> tag_names)
    : fields(normalized(std::move(field_names))), tags(normalized(std::move(tag_names))) {}

bool TypePattern::requires_tag(const std::string& name) const { return contains_sorted(tags, name); }

bool TypePattern::requires_field(const std::string& name) const {
    return contains_sorted(fields, name);
}

bool TypePattern::subset_of(const TypePattern& other) const {
    return std::includes(other.fields.begin(), other.fields.end(), fields.begin(), fields.end()) &&
           std::includes(other.tags.begin(), other.tags.end(), tags.begin(), tags.end());
}

std::string TypePattern::describe() const {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& f : fields) {
        if (!first) os << ',';
        os << f;
        first = false;
    }
    for (const auto& t : tags) {
        if (!first) os << ',';
        os << '<' << t << '>';
        first = false;
    }
    os << '}';
    return os.str();
}

TypePattern tags_pattern(std::initializer_list<std::string> tag_names) {
    return TypePattern(std::vector<std::string>{}, std::vector<std::string>(tag_names));
}

BoxSignature::BoxSignature(TypePattern in, std::vector<TypePattern> outs)
    : input(std::move(in)), outputs(std::move(outs)) {
    if (outputs.empty()) {
        throw RecordError("box signature needs at least one output pattern");
    }
}

bool matches(const Record& r, const TypePattern& p) {
    for (const auto& f : p.fields) {
        if (!r.has_field(f)) return false;
    }
    for (const auto& t : p.tags) {
        if (!r.has_tag(t)) return false;
    }
    return true;
}

std::optional<std::size_t> best_match(const Record& r, std::span<const TypePattern> patterns) {
    std::optional<std::size_t> best;
    std::size_t best_size = 0;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        if (!matches(r, patterns[i])) continue;
        if (!best || patterns[i].size() > best_size) {
            best = i;
            best_size = patterns[i].size();
        }
    }
    return best;
}

Record merge_records(const Record& first, const Record& second) {
    Record out = first;
    for (const auto& [name, payload] : second.fields()) {
        if (!out.has_field(name) && !out.has_tag(name)) out.set_field(name, payload);
    }
    for (const auto& [name, value] : second.tags()) {
        if (!out.has_tag(name) && !out.has_field(name)) out.set_tag(name, value);
    }
    return out;
}

}  // namespace coord::snet
