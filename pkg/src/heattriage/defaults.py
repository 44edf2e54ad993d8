"""Built-in stage vocabulary and signature-to-stage mapping rules.

Both are plain data so deployments can dump them to JSON, edit, and load
their own versions; nothing else in the package hardcodes stage names.
"""

UNMAPPED_STAGE = "unmapped"

# (stage_id, display name, smoothing seconds). Smoothing reflects the
# expected duration of one action of that kind and is operator-tunable.
DEFAULT_STAGES: list[tuple[str, str, float]] = [
    ("discovery", "Discovery / Reconnaissance", 300.0),
    ("exploitation", "Exploitation", 120.0),
    ("privilege_escalation", "Privilege Escalation", 120.0),
    ("lateral_movement", "Lateral Movement", 120.0),
    ("command_and_control", "Command and Control", 600.0),
    ("exfiltration", "Exfiltration", 300.0),
    ("denial_of_service", "Denial of Service", 120.0),
    ("benign", "Benign / Informational", 300.0),
    (UNMAPPED_STAGE, "Unmapped", 300.0),
]

# First-match-wins rules keyed on Suricata classification categories, with a
# few substring rules for intents Suricata has no category for. Rule kinds:
# signature_id (exact), signature (exact text), substring (in signature),
# category (exact classification text).
DEFAULT_MAPPING_RULES: list[dict] = [
    {"match": {"kind": "substring", "value": "Lateral"}, "stage": "lateral_movement"},
    {"match": {"kind": "substring", "value": "SMB Executable"}, "stage": "lateral_movement"},
    {"match": {"kind": "substring", "value": "Exfiltration"}, "stage": "exfiltration"},
    {"match": {"kind": "substring", "value": "DNS Tunnel"}, "stage": "exfiltration"},
    {"match": {"kind": "category", "value": "Attempted Information Leak"}, "stage": "discovery"},
    {"match": {"kind": "category", "value": "Information Leak"}, "stage": "discovery"},
    {"match": {"kind": "category", "value": "Detection of a Network Scan"}, "stage": "discovery"},
    {"match": {"kind": "category", "value": "Misc Attack"}, "stage": "exploitation"},
    {"match": {"kind": "category", "value": "Web Application Attack"}, "stage": "exploitation"},
    {"match": {"kind": "category", "value": "Attempted User Privilege Gain"}, "stage": "exploitation"},
    {"match": {"kind": "category", "value": "Unsuccessful User Privilege Gain"}, "stage": "exploitation"},
    {"match": {"kind": "category", "value": "Successful User Privilege Gain"}, "stage": "exploitation"},
    {"match": {"kind": "category", "value": "Attempted Administrator Privilege Gain"}, "stage": "privilege_escalation"},
    {"match": {"kind": "category", "value": "Successful Administrator Privilege Gain"}, "stage": "privilege_escalation"},
    {"match": {"kind": "category", "value": "A Network Trojan was Detected"}, "stage": "command_and_control"},
    {"match": {"kind": "category", "value": "Malware Command and Control Activity Detected"}, "stage": "command_and_control"},
    {"match": {"kind": "category", "value": "Domain Observed Used for C2 Detected"}, "stage": "command_and_control"},
    {"match": {"kind": "category", "value": "Exploit Kit Activity Detected"}, "stage": "command_and_control"},
    {"match": {"kind": "category", "value": "Potential Corporate Privacy Violation"}, "stage": "exfiltration"},
    {"match": {"kind": "category", "value": "Attempted Denial of Service"}, "stage": "denial_of_service"},
    {"match": {"kind": "category", "value": "Detection of a Denial of Service Attack"}, "stage": "denial_of_service"},
    {"match": {"kind": "category", "value": "Not Suspicious Traffic"}, "stage": "benign"},
    {"match": {"kind": "category", "value": "Unknown Traffic"}, "stage": "benign"},
    {"match": {"kind": "category", "value": "Generic Protocol Command Decode"}, "stage": "benign"},
    {"match": {"kind": "category", "value": "Misc activity"}, "stage": "benign"},
]
