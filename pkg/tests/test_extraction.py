from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import DESCRIPTOR_FIXTURES_BAD, DESCRIPTOR_FIXTURES_OK, StubBackend
from tagcraft import PromptRequest, TopicDescriptor, extract_descriptor, extract_descriptor_set
from tagcraft.errors import DescriptorParseError
from tagcraft.extraction import REPAIR_INSTRUCTION, descriptor_to_json, request_descriptor

A2_STYLE = """
{
 "topic_name": " Software_Authentication_Access_Issues ",
 "topic_description": "Issues related to A B C and D. This is different from X Y Z."
}

{
"topic_name": " Hardware_Authentication_Access_Issues",
"topic_description": "Issues related to X Y and Z. This is different from A B C D."
}

{
 "topic_name": " Oracle_Authentication_Access_Issues ",
 "topic_description": "Issues related specifically to oracle login."
}
""".strip()


@pytest.mark.parametrize("text,name,description", DESCRIPTOR_FIXTURES_OK)
def test_well_formed_fixtures_parse(text: str, name: str, description: str) -> None:
    descriptor = extract_descriptor(text)
    assert descriptor.topic_name == name
    assert descriptor.topic_description == description


@pytest.mark.parametrize("text", DESCRIPTOR_FIXTURES_BAD)
def test_malformed_fixtures_raise(text: str) -> None:
    with pytest.raises(DescriptorParseError):
        extract_descriptor(text)


def test_set_extraction_preserves_order_of_three_objects() -> None:
    descriptors = extract_descriptor_set(A2_STYLE)
    assert [d.topic_name for d in descriptors] == [
        "Software_Authentication_Access_Issues",
        "Hardware_Authentication_Access_Issues",
        "Oracle_Authentication_Access_Issues",
    ]


def test_set_extraction_single_object() -> None:
    descriptors = extract_descriptor_set('{"topic_name": "X", "topic_description": "Y."}')
    assert len(descriptors) == 1


def test_set_extraction_array_form() -> None:
    text = (
        '[{"topic_name": "A", "topic_description": "a."},'
        ' {"topic_name": "B", "topic_description": "b."}]'
    )
    descriptors = extract_descriptor_set(text)
    assert [d.topic_name for d in descriptors] == ["A", "B"]


def test_set_extraction_skips_non_descriptor_objects() -> None:
    text = '{"note": "meta"} {"topic_name": "Real", "topic_description": "kept."}'
    descriptors = extract_descriptor_set(text)
    assert [d.topic_name for d in descriptors] == ["Real"]


def test_set_extraction_zero_descriptors_raises() -> None:
    with pytest.raises(DescriptorParseError):
        extract_descriptor_set("nothing JSON-ish here")


_name_strategy = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,15}", fullmatch=True)
_desc_strategy = st.text(min_size=1, max_size=60).filter(lambda s: s.strip())


@given(_name_strategy, _desc_strategy)
def test_round_trip_identity(name: str, description: str) -> None:
    descriptor = TopicDescriptor(name, description)
    assert extract_descriptor(descriptor_to_json(descriptor)) == descriptor


@settings(max_examples=300)
@given(st.text(max_size=300))
def test_extract_never_panics_on_arbitrary_text(text: str) -> None:
    try:
        result = extract_descriptor(text)
        assert isinstance(result, TopicDescriptor)
    except DescriptorParseError:
        pass


def test_request_descriptor_repairs_then_succeeds() -> None:
    good = '{"topic_name": "X", "topic_description": "Y."}'
    backend = StubBackend(completions=["prose", "still prose", good])
    request = PromptRequest(user_text="base prompt")
    descriptor = request_descriptor(backend, request)
    assert descriptor.topic_name == "X"
    assert len(backend.prompts) == 3
    assert backend.prompts[0] == "base prompt"
    assert backend.prompts[1].endswith(REPAIR_INSTRUCTION)
    assert backend.prompts[2].count(REPAIR_INSTRUCTION) == 2


def test_request_descriptor_surfaces_error_after_two_repairs() -> None:
    backend = StubBackend(completions=["prose"])
    with pytest.raises(DescriptorParseError):
        request_descriptor(backend, PromptRequest(user_text="base prompt"))
    assert len(backend.prompts) == 3  # initial + 2 re-prompts


def test_fuzz_seeded_random_strings_small() -> None:
    rng = random.Random(99)
    alphabet = '{}[]":,\\ abcdef\n\té☃'
    for _ in range(500):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 120)))
        try:
            extract_descriptor(text)
        except DescriptorParseError:
            pass


def test_json_emission_uses_lowercase_keys() -> None:
    descriptor = TopicDescriptor("X", "Y.")
    assert json.loads(descriptor_to_json(descriptor)) == {
        "topic_name": "X",
        "topic_description": "Y.",
    }
