"""Tests for mutation operators, enumeration and application."""

import pytest

from mutsched.exceptions import ConfigurationError, EmptyOperatorSetError, MutationError
from mutsched.model import Const, Read, Write, serialize_model, validate
from mutsched.mutation import (
    ALL_OPERATORS,
    DeltaConfig,
    MutationDescriptor,
    MutationOperator as Op,
    MutationTarget,
    OperatorClass,
    apply_mutant,
    enumerate_mutants,
    parse_operator_set,
    survey_mutants,
)

DEFAULT = DeltaConfig()


def _apply(model, op, task=None, delta=None, **target):
    return apply_mutant(model, MutationDescriptor(op, MutationTarget(task=task, **target), delta=delta))


def test_catalog_has_twenty_operators():
    assert len(ALL_OPERATORS) == 20
    assert Op.from_key('mrsmr') is Op.RSMR
    assert Op.ITO.title == 'Increase Task Offset'
    assert {op.op_class for op in ALL_OPERATORS} == set(OperatorClass)


def test_operator_classes():
    shared = [op.key for op in ALL_OPERATORS if op.op_class is OperatorClass.SHARED_MEMORY]
    assert shared == ['mDSM', 'mUDSM', 'mRDSM', 'mRSM', 'mRMSMR', 'mRSMR']
    assert Op.ITET.op_class.slug == 'execution-time'
    assert Op.ATPREC.takes_delta is False


def test_parse_operator_set():
    assert parse_operator_set('period,mITO') == (Op.ITO, Op.ITPER, Op.DTPER)
    assert parse_operator_set('none') == ()
    assert parse_operator_set('all') == ALL_OPERATORS
    assert parse_operator_set('shared-memory')[0] is Op.DSM


def test_parse_operator_set_rejects_unknown():
    with pytest.raises(ConfigurationError, match="bogus"):
        parse_operator_set('bogus')


def test_delta_config_validation():
    with pytest.raises(ConfigurationError):
        DeltaConfig({OperatorClass.OFFSET: ()})
    with pytest.raises(ConfigurationError):
        DeltaConfig({OperatorClass.OFFSET: (0,)})
    with pytest.raises(ConfigurationError):
        DeltaConfig(mrsm_position='middle')
    assert DeltaConfig.uniform([4]).for_class(OperatorClass.JITTER) == (4,)
    assert DeltaConfig.from_lists([1], [5]).for_class(OperatorClass.PRIORITY) == (5,)


def test_mutant_ids():
    assert MutationDescriptor(Op.ITO, MutationTarget(task='T1'), delta=3).mutant_id == 'mITO-T1-d3'
    assert MutationDescriptor(
        Op.DSM, MutationTarget(task='T2', runnable='R2', action_index=0, store='A')
    ).mutant_id == 'mDSM-R2.0.A'
    assert MutationDescriptor(
        Op.RSMR, MutationTarget(task='T1', runnable='Monitor', action_index=1, store='X'), replacement='Y'
    ).mutant_id == 'mRSMR-Monitor.1.X-to.Y'
    assert MutationDescriptor(
        Op.RRPREC, MutationTarget(task='T2', runnable='R3', other='R2')
    ).mutant_id == 'mRRPREC-T2.R3.after.R2'


def test_enumerate_requires_operators(producer_consumer):
    with pytest.raises(EmptyOperatorSetError):
        enumerate_mutants(producer_consumer, DEFAULT, [])


def test_enumerate_no_removable_precedence(producer_consumer):
    assert enumerate_mutants(producer_consumer, DEFAULT, {Op.RTPREC}) == []


def test_enumerate_task_pairs(producer_consumer):
    ids = [d.mutant_id for d in enumerate_mutants(producer_consumer, DEFAULT, {Op.ATPREC})]
    assert ids == ['mATPREC-T1.after.T2', 'mATPREC-T2.after.T1']


def test_enumerate_three_servo_precedence(three_servo):
    mutants = enumerate_mutants(three_servo, DEFAULT, {Op.ATPREC, Op.RTPREC})
    assert len(mutants) == 6
    assert {d.operator for d in mutants} == {Op.ATPREC}


def test_enumerate_two_cycles_are_inapplicable(producer_consumer):
    mutant = _apply(producer_consumer, Op.ATPREC, 'T1', other='T2')
    survey = survey_mutants(mutant, DEFAULT, {Op.ATPREC})
    assert survey.descriptors == []
    assert survey.inapplicable[OperatorClass.PRECEDENCE] == 1


def test_enumerate_execution_time_per_runnable(producer_consumer):
    """Test δ=3 removes a 3-tick budget entirely and is excluded."""
    survey = survey_mutants(producer_consumer, DEFAULT, {Op.ITET, Op.DTET})
    by_op = [d.operator for d in survey]
    assert by_op.count(Op.ITET) == 9
    assert by_op.count(Op.DTET) == 6
    assert survey.inapplicable[OperatorClass.EXECUTION_TIME] == 3
    assert survey.descriptors[0].mutant_id == 'mITET-T1.R1-d1'


def test_enumerate_order_is_task_then_delta(producer_consumer):
    ids = [d.mutant_id for d in enumerate_mutants(producer_consumer, DEFAULT, {Op.ITPER})]
    assert ids == ['mITPER-T1-d1', 'mITPER-T1-d2', 'mITPER-T1-d3',
                   'mITPER-T2-d1', 'mITPER-T2-d2', 'mITPER-T2-d3']


def test_enumerate_offset_decrease_needs_offset(producer_consumer):
    survey = survey_mutants(producer_consumer, DEFAULT, {Op.DTO})
    assert len(survey) == 0
    assert survey.inapplicable[OperatorClass.OFFSET] == 6


def test_enumerate_runnable_precedence(producer_consumer):
    assert [d.mutant_id for d in enumerate_mutants(producer_consumer, DEFAULT, {Op.RRPREC})] == ['mRRPREC-T2.R3.after.R2']
    survey = survey_mutants(producer_consumer, DEFAULT, {Op.ARPREC})
    assert len(survey) == 0
    assert survey.inapplicable[OperatorClass.PRECEDENCE] == 1


def test_enumerate_shared_memory_sites(producer_consumer):
    ids = lambda ops: [d.mutant_id for d in enumerate_mutants(producer_consumer, DEFAULT, ops)]
    assert ids({Op.DSM}) == ['mDSM-R3.0.A', 'mDSM-R2.0.A']
    assert ids({Op.UDSM}) == ['mUDSM-R1.0.A', 'mUDSM-R2.1.A']
    assert ids({Op.RDSM}) == ['mRDSM-R1.0.A']
    assert ids({Op.RSM}) == ['mRSM-T1.R1.A']
    assert ids({Op.RMSMR}) == ['mRMSMR-R3.0.A', 'mRMSMR-R2.0.A']
    assert ids({Op.RSMR}) == []


def test_enumerate_store_replacements(throttle):
    mutants = enumerate_mutants(throttle, DEFAULT, {Op.RSMR})
    assert len(mutants) == 8 * 6
    assert all(d.replacement != d.target.store for d in mutants)


def test_enumerated_mutants_are_valid(corpus_model):
    for d in enumerate_mutants(corpus_model, DEFAULT, ALL_OPERATORS):
        assert validate(apply_mutant(corpus_model, d)).ok, d.mutant_id


def test_enumerated_ids_are_unique(corpus_model):
    ids = [d.mutant_id for d in enumerate_mutants(corpus_model, DEFAULT, ALL_OPERATORS)]
    assert len(ids) == len(set(ids))


def test_increase_offset(producer_consumer):
    mutant = _apply(producer_consumer, Op.ITO, 'T1', 3)
    assert mutant.task('T1').offset == 3
    assert mutant.task('T2') == producer_consumer.task('T2')
    assert mutant.runnables == producer_consumer.runnables


def test_decrease_period(producer_consumer, throttle):
    assert _apply(producer_consumer, Op.DTPER, 'T1', 4).task('T1').period == 6
    assert _apply(throttle, Op.DTPER, 'T1', 1).task('T1').period == 4


def test_inverse_pairs_restore_model(producer_consumer):
    pairs = [(Op.ITO, Op.DTO), (Op.ITPER, Op.DTPER), (Op.ITPRI, Op.DTPRI), (Op.ITJ, Op.DTJ)]
    for inc, dec in pairs:
        restored = _apply(_apply(producer_consumer, inc, 'T1', 2), dec, 'T1', 2)
        assert restored == producer_consumer, inc.key
    restored = _apply(_apply(producer_consumer, Op.ITET, 'T2', 1, runnable='R2'), Op.DTET, 'T2', 1, runnable='R2')
    assert restored == producer_consumer


def test_task_level_execution_time_changes_every_runnable(producer_consumer):
    mutant = _apply(producer_consumer, Op.ITET, 'T2', 2)
    assert [mutant.runnables[r].wcet for r in ('R1', 'R2', 'R3')] == [3, 5, 5]


def test_priority_operators_resolve_rate_monotonic(three_servo):
    """Test only the target gets its resolved priority written; the others stay implicit."""
    mutant = _apply(three_servo, Op.ITPRI, 'T3', 1)
    assert [t.priority for t in mutant.tasks] == [None, None, 2]
    assert [t.priority for t in _apply(three_servo, Op.DTPRI, 'T1', 1).tasks] == [2, None, None]


def _edit_sites(model, mutant):
    tasks = [a.id for a, b in zip(model.tasks, mutant.tasks) if a != b]
    runnables = [r for r in model.runnables if model.runnables[r] != mutant.runnables[r]]
    return tasks + runnables


def test_every_mutant_edits_one_site(corpus_model):
    """Test each first-order mutant differs from its input in a single task or runnable."""
    for d in enumerate_mutants(corpus_model, DEFAULT, ALL_OPERATORS):
        mutant = apply_mutant(corpus_model, d)
        assert len(_edit_sites(corpus_model, mutant)) == 1, d.mutant_id
        assert mutant.stores == corpus_model.stores, d.mutant_id


def test_invalid_mutants_are_rejected(producer_consumer):
    with pytest.raises(MutationError, match="period"):
        _apply(producer_consumer, Op.DTPER, 'T1', 10)
    with pytest.raises(MutationError, match="offset"):
        _apply(producer_consumer, Op.DTO, 'T1', 1)
    with pytest.raises(MutationError, match="wcet"):
        _apply(producer_consumer, Op.DTET, 'T1', 3, runnable='R1')
    with pytest.raises(MutationError, match="delta"):
        _apply(producer_consumer, Op.ITO, 'T1', 0)
    with pytest.raises(MutationError, match="unknown task"):
        _apply(producer_consumer, Op.ITO, 'T9', 1)


def test_define_shared_memory_inserts_default(producer_consumer):
    mutant = _apply(producer_consumer, Op.DSM, 'T2', runnable='R2', action_index=0, store='A')
    assert mutant.runnables['R2'].actions[:2] == (Write('A', Const(0)), Read('A', 'r'))


def test_undefine_and_remove_definition(producer_consumer):
    assert _apply(producer_consumer, Op.UDSM, 'T1', runnable='R1', action_index=0, store='A').runnables['R1'].actions == ()
    assert _apply(producer_consumer, Op.RDSM, 'T1', runnable='R1', action_index=0, store='A').runnables['R1'].actions == ()
    with pytest.raises(MutationError, match="constant"):
        _apply(producer_consumer, Op.RDSM, 'T2', runnable='R2', action_index=1, store='A')


def test_action_site_must_match(producer_consumer):
    with pytest.raises(MutationError, match="not a Read"):
        _apply(producer_consumer, Op.RMSMR, 'T1', runnable='R1', action_index=0, store='A')


def test_reference_shared_memory(producer_consumer, throttle):
    mutant = _apply(producer_consumer, Op.RSM, 'T1', runnable='R1', store='A')
    assert mutant.runnables['R1'].actions[-1] == Read('A', 'ref_A')
    last = DeltaConfig(mrsm_position='last')
    d = next(d for d in enumerate_mutants(throttle, last, {Op.RSM}) if d.target.task == 'T2')
    assert d.target.runnable == 'APPSnsr'


def test_replace_shared_memory_reference(throttle):
    d = MutationDescriptor(
        Op.RSMR,
        MutationTarget(task='T1', runnable='Controller', action_index=0, store='TPSPercentValue'),
        replacement='TPSPrimaryValue',
    )
    mutant = apply_mutant(throttle, d)
    assert mutant.runnables['Controller'].actions[0] == Read('TPSPrimaryValue', 'tps')
    same = MutationDescriptor(d.operator, d.target, replacement='TPSPercentValue')
    with pytest.raises(MutationError, match="differ"):
        apply_mutant(throttle, same)


def test_apply_does_not_modify_input(corpus_model):
    before = serialize_model(corpus_model)
    for d in enumerate_mutants(corpus_model, DEFAULT, ALL_OPERATORS)[:40]:
        apply_mutant(corpus_model, d)
    assert serialize_model(corpus_model) == before
