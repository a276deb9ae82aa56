"""
Scenario Runner.

Declarative scenario files in, seeded experiments run, reports out.
"""
