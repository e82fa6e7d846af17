from django.db import models


class RunSummary(models.Model):
    """
    Outcome of one solver run. Built in memory for every run and written as a
    flat key-value summary file; saved to the database only when recorded.
    """
    experiment_id = models.CharField(
        max_length=50,
        help_text="Preset id (1, 2, 3), 'config' for config-file runs, or a sweep tag",
    )
    parameters = models.TextField(
        help_text="Config text echo (key = value lines) the run was started with",
    )
    steps = models.IntegerField(
        default=0,
        help_text="Time steps taken",
    )
    picard_iterations = models.IntegerField(
        default=0,
        help_text="Picard iterations summed over all steps",
    )
    wall_time = models.FloatField(
        default=0.0,
        help_text="Wall-clock seconds",
    )
    stationary_metric = models.FloatField(
        null=True, blank=True,
        help_text="Last L2 relative change between time steps (empty if not finite)",
    )
    negativity_violations = models.IntegerField(
        default=0,
        help_text="Steps with a nodal value below -1e-12",
    )
    u1_min = models.FloatField(default=0.0)
    u1_max = models.FloatField(default=0.0)
    u1_mass = models.FloatField(default=0.0, help_text="Lumped integral of u1")
    u2_min = models.FloatField(default=0.0)
    u2_max = models.FloatField(default=0.0)
    u2_mass = models.FloatField(default=0.0, help_text="Lumped integral of u2")

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        verbose_name = "Run summary"
        verbose_name_plural = "Run summaries"
        ordering = ['-created_at']

    # field order of the summary file
    SUMMARY_FIELDS = [
        'experiment_id', 'steps', 'picard_iterations', 'wall_time', 'stationary_metric',
        'negativity_violations', 'u1_min', 'u1_max', 'u1_mass', 'u2_min', 'u2_max', 'u2_mass',
    ]

    def __str__(self):
        return f"Run {self.experiment_id}: {self.steps} steps, metric {self.stationary_metric}"
