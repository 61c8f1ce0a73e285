from diveq.replacement.donors import donor_samplers, importance_donors, uniform_donors
from diveq.replacement.policy import ReplacementKind, ReplacementPolicy
from diveq.replacement.replace import perturbation_std, replace, should_replace, usage_shares
